#pragma once

#include <stdexcept>
#include <string>

namespace whs {

// Base error carrying a stable machine-readable code next to the human text.
// The CLI serializes these as {"error": code(), "message": what()}.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

#define WHS_DEFINE_ERROR(Name, code_literal)                         \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& msg)                        \
            : Error(code_literal, msg) {}                            \
    }

WHS_DEFINE_ERROR(ConfigError, "config_error");
WHS_DEFINE_ERROR(DegenerateCritical, "degenerate_critical");
WHS_DEFINE_ERROR(NonConvergence, "non_convergence");
WHS_DEFINE_ERROR(FlowStall, "flow_stall");
WHS_DEFINE_ERROR(AmbiguousCluster, "ambiguous_cluster");
WHS_DEFINE_ERROR(TransversalityWarning, "transversality_warning");
WHS_DEFINE_ERROR(FrameDegeneracy, "frame_degeneracy");
WHS_DEFINE_ERROR(BoundarySquareNonzero, "boundary_square_nonzero");
WHS_DEFINE_ERROR(MeshUnderResolved, "mesh_under_resolved");
WHS_DEFINE_ERROR(ResolutionTooCoarse, "resolution_too_coarse");
WHS_DEFINE_ERROR(NoConvergenceEigen, "eigensolver_no_convergence");
WHS_DEFINE_ERROR(SupportOverlap, "support_overlap");
WHS_DEFINE_ERROR(RankDeficient, "rank_deficient");
WHS_DEFINE_ERROR(GapNotOpen, "gap_not_open");
WHS_DEFINE_ERROR(TruncationWarning, "truncation_warning");
WHS_DEFINE_ERROR(IoError, "io_error");

#undef WHS_DEFINE_ERROR

} // namespace whs
