from ._whs import *  # noqa: F401,F403
