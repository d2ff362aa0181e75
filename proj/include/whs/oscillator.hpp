#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "whs/eigensolve.hpp"

namespace whs {

// Harmonic-oscillator model of the Witten Laplacian in admissible coordinates
// at a critical point of index k, acting on q-forms in n variables for
// deformation parameter t > 0.
struct ModelOperator {
    int n = 1;
    int k = 0;
    int q = 0;
    double t = 1.0;
};

// Fiber shift of the zeroth-order model term on dx_I, axes 1-based:
//   -n + 2k - 2q + 4 #{j : k+1 <= i_j <= n}
int epsilon_coeff(const std::vector<int>& I_one_based, int q, int k, int n);
// same with I as a 0-based axis bitmask
int epsilon_coeff_mask(uint32_t mask, int q, int k, int n);
// min over all degree-q multi-indices (equals -n exactly when q == k)
int epsilon_min(int q, int k, int n);

// Closed-form ascending spectrum by separation of variables: the levels are
// t (n + 2 sum_i m_i + eps_I), enumerated with multiplicity.
std::vector<double> model_spectrum(const ModelOperator& op, int count);

int model_kernel_dim(const ModelOperator& op); // 1 if q == k else 0

// L2-normalized ground-state scalar profile (t/pi)^{n/4} e^{-t |x|^2 / 2}
// (fiber part dx_1 ^ ... ^ dx_q). The printed closed form elsewhere carries
// exponent n/2; the unit-norm Gaussian integral forces n/4, which is what
// this returns.
struct GroundState {
    int n;
    int q;
    double t;
    double prefactor; // (t/pi)^{n/4}
    double value(const Eigen::VectorXd& x) const;
    double value_radial(double r) const;
};
GroundState ground_state(int n, int q, double t);

// C^2 quintic cutoff bridge: 1 on [0, eta/2], 0 on [eta, inf).
double cutoff_profile(double u, double eta);
double cutoff_profile_d1(double u, double eta);
double cutoff_profile_d2(double u, double eta);

// beta_q(t) = (t/pi)^{n/4} ( int gamma_eta(|x|)^2 e^{-t|x|^2} dx )^{1/2}
double beta_normalizer(int n, int q, double t, double eta);

// Unit-norm compactly supported state beta^{-1} gamma_eta(|x|) * ground state.
struct CutoffGaussian {
    int n;
    int q;
    double t;
    double eta;
    double beta;
    double scalar_value(double r) const;   // radial profile including beta
    double value(const Eigen::VectorXd& x) const;
};
CutoffGaussian cutoff_state(int n, int q, double t, double eta);

// sup-norm of the model operator applied to the cutoff state (q = k), from
// the closed-form radial expression; supported on the bridge annulus.
double cutoff_residual_sup(int n, int q, double t, double eta);

// <Delta_{q,k}(t) w~, w~> by radial quadrature (>= 2 t |q - k|).
double cutoff_rayleigh(const ModelOperator& op, double eta);

// ---------------------------------------------------------------------------
// Finite-difference discretization of the model operator on [-L, L]^n with
// zero boundary, fourth-order stencils; the numerical cross-check of the
// closed form. The operator is diagonal on fibers, so the scalar part is
// solved once and fiber shifts are added.
// ---------------------------------------------------------------------------
struct BoxDiscretization {
    int n;
    double L;        // half width, default 8 t^{-1/2} + eta
    int points;      // per axis
    double t;

    double spacing() const { return 2.0 * L / points; }
    double coord(int i) const { return -L + (i + 0.5) * spacing(); }
    long total() const {
        long p = 1;
        for (int i = 0; i < n; ++i) p *= points;
        return p;
    }
    // scalar part sum_i(-d^2/dx_i^2) + t^2 |x|^2
    LinOp scalar_op() const;
    // lowest eigenvalues of the scalar part (dense for n=1, lobpcg for n=2)
    std::vector<double> scalar_spectrum(int count, double tol = 1e-8) const;
    // sample a radial profile f(|x|) on the box grid (unnormalized vector)
    Eigen::VectorXd sample_radial(const std::function<double(double)>& f) const;
};
BoxDiscretization default_box(int n, double t, double eta);

// Box spectrum of the full model operator, assembled per fiber from the
// scalar spectrum, ascending. Throws TruncationWarning if it disagrees with
// the closed form beyond rel_tol.
std::vector<double> box_model_spectrum(const ModelOperator& op, int count,
                                       double rel_tol, double eta);

// Smallest Rayleigh quotient of the model operator (q = k) on the orthogonal
// complement of the cutoff state, via constrained LOBPCG on the box grid.
double orthogonal_coercivity(int n, int q, double t, double eta);

} // namespace whs
