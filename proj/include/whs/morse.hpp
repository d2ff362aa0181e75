#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "whs/forms.hpp"
#include "whs/torus.hpp"

namespace whs {

// One solution sample of the downward gradient flow.
struct FlowSample {
    double time;
    Eigen::VectorXd pos;
    double h;
};

struct Trajectory {
    std::vector<FlowSample> samples;
    int origin_cp = -1;      // -1 when launched from a generic point
    int dest_cp = -1;        // capture target, -1 if none
    std::vector<double> closest_approach; // per critical point id
};

struct FlowOptions {
    double tol = 1e-10;           // local error per step
    double capture_radius = 0.0;  // 0 -> derived from the critical set
    double max_time = 400.0;
    long max_steps = 200000;
    double max_step_dx = 0.0;     // displacement cap; 0 -> capture_radius / 2
    bool reverse = false;         // flow of +grad h instead
};

// Context for gradient dynamics over one (model, spec, critical set).
class MorseFlow {
public:
    MorseFlow(const TorusModel& model, const MorseFunctionSpec& spec,
              std::vector<CriticalPoint> cps);

    const TorusModel& model() const { return model_; }
    const MorseFunctionSpec& spec() const { return spec_; }
    const std::vector<CriticalPoint>& critical_points() const { return cps_; }
    double capture_radius() const { return capture_radius_; }
    double min_distance() const { return min_dist_; }

    Trajectory flow(const Eigen::VectorXd& start, const FlowOptions& opt = {}) const;

    // flow with a bundle of tangent vectors advected by the linearized field;
    // columns of frames[i] correspond to samples[i]
    Trajectory flow_with_frame(const Eigen::VectorXd& start, const Eigen::MatrixXd& frame0,
                               std::vector<Eigen::MatrixXd>& frames,
                               const FlowOptions& opt = {}) const;

private:
    TorusModel model_;
    MorseFunctionSpec spec_;
    std::vector<CriticalPoint> cps_;
    double capture_radius_ = 0;
    double min_dist_ = 0;

    Trajectory integrate(const Eigen::VectorXd& start, const Eigen::MatrixXd* frame0,
                         std::vector<Eigen::MatrixXd>* frames, const FlowOptions& opt) const;
};

struct ConnectingOrbit {
    Trajectory trajectory;
    int sign = 0;
    Eigen::VectorXd launch_dir;      // unit vector in the unstable eigenspace
    Eigen::VectorXd level_crossing;  // crossing of h = (h(x)+h(y))/2
};

struct OrbitOptions {
    int shoot_count = 64;
    double flow_tol = 1e-10;
    double refine_tol = 1e-12; // angular tolerance of the boundary search
};

// Signed connecting orbits x -> y for index x = index y + 1.
std::vector<ConnectingOrbit> connecting_orbits(const MorseFlow& mf, int x_id, int y_id,
                                               const OrbitOptions& opt = {});

// Orientation comparison along one orbit: transport the ordered unstable
// frame of x by the variational flow with QR renormalization; at arrival
// factor out the incoming flow direction and compare with the frame of y.
int orbit_sign(const MorseFlow& mf, int x_id, int y_id, const Eigen::VectorXd& launch_dir);

int incidence(const MorseFlow& mf, int x_id, int y_id, const OrbitOptions& opt = {});

struct MorseComplex {
    std::vector<CriticalPoint> cps;
    std::vector<std::vector<int>> generators; // per degree: cp ids
    // partial[q]: C^q -> C^{q+1}; rows index-(q+1) points, cols index-q points
    std::vector<Eigen::MatrixXi> partial;

    int degree_count(int q) const { return static_cast<int>(generators[q].size()); }
};

MorseComplex build_complex(const MorseFlow& mf, const OrbitOptions& opt = {});

// exact integer rank (fraction-free elimination)
int integer_rank(Eigen::MatrixXi m);

std::vector<int> cohomology_ranks(const MorseComplex& cx);

// ---------------------------------------------------------------------------
// Unstable cells and integration of forms over them.
// ---------------------------------------------------------------------------

struct CellRay {
    double theta = 0; // angular seed parameter (k = 2)
    int side = +1;    // +-1 for k = 1
    std::vector<Eigen::VectorXd> pos;       // resampled by arc length
    std::vector<Eigen::VectorXd> tangent;   // unit velocity at samples
    std::vector<Eigen::VectorXd> dtheta;    // per-sample theta-Jacobian (k = 2)
    std::vector<double> arc;                // arc length parameter
    Eigen::VectorXd tail_start;             // where the ray stops near the sink
    int dest_cp = -1;
};

struct UnstableCell {
    int cp_id = -1;
    int dim = 0;          // k = Morse index
    Eigen::MatrixXd frame; // ordered orientation frame of W^-
    double launch_radius = 0;
    double capture_radius = 0;
    std::vector<CellRay> rays;
    bool whole_manifold = false; // k == n and unique top point: closure is M
};

struct CellOptions {
    int rays = 64;              // fan size for k = 2
    double arc_step = 0.0;      // resampling step; 0 -> feature_length / 6
    double feature_length = 0.02; // finest scale the integrand is expected to have
    double flow_tol = 1e-10;
    double quad_tol = 1e-7;     // Richardson residual gate
};

UnstableCell build_unstable_cell(const MorseFlow& mf, int cp_id, const CellOptions& opt = {});

// Pointwise evaluator of a q-form at arbitrary points (fiber components in
// lexicographic order).
struct FormSampler {
    int n = 0;
    int q = 0;
    std::function<void(const Eigen::VectorXd&, double*)> eval;
};

FormSampler make_sampler(const TorusModel& model, SpectralGrid& grid, const GridForm& w,
                         double prune_rel = 1e-14);

// multiply a sampler by a positive weight exp(c * (h(x) - h_ref))
FormSampler weighted_sampler(const TorusModel& model, const MorseFunctionSpec& spec,
                             const FormSampler& base, double c, double h_ref);

double integrate_over_unstable(const MorseFlow& mf, const UnstableCell& cell,
                               const FormSampler& form, const CellOptions& opt = {});

// Exact route for a whole-manifold top cell: oriented grid integral of the
// top fiber times an optional pointwise weight.
double integrate_top_cell_grid(const FormOps& ops, const GridForm& w, const UnstableCell& cell,
                               const std::vector<double>* weight = nullptr);

// max over index-(q+1) points of |Int(d w)(x) - (partial Int(w))(x)|
double int_morphism_residual(const MorseFlow& mf, const MorseComplex& cx, FormOps& ops,
                             const GridForm& w, const CellOptions& opt = {});

} // namespace whs
