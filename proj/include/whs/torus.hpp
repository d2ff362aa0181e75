#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "whs/util.hpp"

namespace whs {

// Flat torus T^n = (R/Z)^n with the Euclidean metric and a uniform periodic
// grid of grid_res points per axis. The metric is globally flat, so Hodge
// duality and gradients have constant coefficients everywhere.
struct TorusModel {
    int n = 1;
    int grid_res = 64; // power of two, >= 8

    TorusModel() = default;
    TorusModel(int n_, int grid_res_);

    long total_points() const {
        long p = 1;
        for (int i = 0; i < n; ++i) p *= grid_res;
        return p;
    }
    double cell_volume() const {
        double v = 1;
        for (int i = 0; i < n; ++i) v /= grid_res;
        return v;
    }
};

// One cosine term a * cos(2 pi <m, x> + phi).
struct MorseTerm {
    std::vector<int> freq;
    double amp = 0;
    double phase = 0;
};

// Trigonometric polynomial h(x) = sum_m a_m cos(2 pi <m,x> + phi_m).
// Smooth, periodic, with closed-form derivatives of every order used here.
struct MorseFunctionSpec {
    std::vector<MorseTerm> terms;

    int max_abs_freq() const;

    std::string to_json() const;
    static MorseFunctionSpec from_json(const std::string& text);
};

double eval_h(const TorusModel& model, const MorseFunctionSpec& spec,
              const Eigen::VectorXd& point);
Eigen::VectorXd grad_h(const TorusModel& model, const MorseFunctionSpec& spec,
                       const Eigen::VectorXd& point);
Eigen::MatrixXd hessian_h(const TorusModel& model, const MorseFunctionSpec& spec,
                          const Eigen::VectorXd& point);

// A nondegenerate critical point of h together with its Hessian
// eigenstructure. unstable_frame columns are the eigenvectors of the
// negative eigenvalues, ordered ascending by eigenvalue with deterministic
// signs: this ordered frame is the orientation of the unstable cell W^-.
// stable_frame holds the complementary eigenvectors (ascending as well).
struct CriticalPoint {
    Eigen::VectorXd position;      // in [0,1)^n
    double value = 0;              // h(position)
    int index = 0;                 // Morse index
    Eigen::VectorXd hessian_eigs;  // ascending
    Eigen::MatrixXd unstable_frame; // n x index
    Eigen::MatrixXd stable_frame;   // n x (n - index)

    double grad_norm = 0; // |grad h| at position, for diagnostics
};

struct CriticalPointOptions {
    int seeds_per_axis = 16;       // >= 8
    double tol = 1e-12;            // Newton root tolerance on |grad|
    double degeneracy_rel = 1e-6;  // |eig| floor relative to max |Hessian entry|
    int max_newton_iters = 60;
};

// Newton iteration on grad h = 0 from a seed lattice; converged roots are
// deduplicated modulo the period lattice and classified by the Hessian.
// Sorted by (index, value, lexicographic position).
std::vector<CriticalPoint> find_critical_points(const TorusModel& model,
                                                const MorseFunctionSpec& spec,
                                                const CriticalPointOptions& opt = {});

// Minimal pairwise torus distance between critical points.
double min_critical_distance(const std::vector<CriticalPoint>& cps);

// sum_q (-1)^q m_q; zero for any torus
int euler_characteristic(const std::vector<CriticalPoint>& cps);

} // namespace whs
