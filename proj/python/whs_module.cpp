#include <pybind11/pybind11.h>
PYBIND11_MODULE(_whs, m) { m.doc() = "torus Morse/Hodge laboratory"; }
