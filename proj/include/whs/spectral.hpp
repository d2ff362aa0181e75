#pragma once

#include <map>
#include <memory>
#include <optional>

#include "whs/eigensolve.hpp"
#include "whs/forms.hpp"
#include "whs/morse.hpp"

namespace whs {

// Delta_q(t) as a matrix-free symmetric operator on flattened fiber data,
// with a constant-coefficient Fourier preconditioner. Self-adjointness is
// probed on random band-limited pairs at construction.
class WittenOperatorHandle {
public:
    WittenOperatorHandle(WittenOps& wops, int q, double t, double selfadjoint_tol = 1e-9);

    long dim() const { return dim_; }
    int degree() const { return q_; }
    double deformation() const { return t_; }

    LinOp op();
    LinOp preconditioner();

    Eigen::VectorXd flatten(const GridForm& w) const;
    GridForm unflatten(const Eigen::VectorXd& v) const;

private:
    WittenOps& wops_;
    int q_;
    double t_;
    long dim_;
    double shift_; // preconditioner constant
};

struct SpectrumReport {
    int q = 0;
    double t = 0;
    int grid_res = 0;
    int expected_small = 0;           // m_q from the critical census
    std::vector<double> eigenvalues;  // ascending
    int small_count = 0;              // #{lambda < 1}
    double gap_low = 0;               // max small eigenvalue (0 if none)
    double gap_high = 0;              // min large eigenvalue (nan if none seen)
    int iterations = 0;
};

struct GapFits {
    LineFit decay;  // -log(max small eigenvalue) vs t  (slope = C2)
    LineFit growth; // min large eigenvalue vs t        (slope = C3)
};
GapFits fit_gap_sweep(const std::vector<SpectrumReport>& reports);

struct SpectralOptions {
    double eigen_tol = 1e-8;
    int extra_eigenvalues = 4; // solved beyond m_q
    uint64_t seed = 20020411;
    bool auto_resolution = true; // bump grid_res per t to satisfy the width guard
    long dense_dim_limit = 1400;
    bool dealias = false;
};

// Eigensolve cache keyed by (q, t): holds per-resolution operator contexts and
// warm-starts each solve from the previous t in the chain.
class SpectralWorkspace {
public:
    SpectralWorkspace(const TorusModel& base, const MorseFunctionSpec& spec,
                      const SpectralOptions& opt = {});

    struct Solve {
        int q;
        double t;
        int grid_res = 0;
        Eigen::VectorXd values;
        Eigen::MatrixXd vectors; // Euclidean-orthonormal columns
        int iterations = 0;
    };

    const Solve& solve(int q, double t, int count);
    int resolution_for(double t);

    WittenOps& ops_at(int grid_res);
    const TorusModel& base_model() const { return base_; }
    const MorseFunctionSpec& spec() const { return spec_; }
    const SpectralOptions& options() const { return opt_; }

    // L2-normalized eigenforms of the small cluster (lambda < 1)
    std::vector<GridForm> small_eigenforms(int q, double t, int count);

private:
    TorusModel base_;
    MorseFunctionSpec spec_;
    SpectralOptions opt_;
    std::map<int, std::unique_ptr<WittenOps>> ops_;
    std::map<std::pair<int, long>, Solve> cache_; // key (q, t-bits)
    std::map<double, int> res_cache_;
};

// Threshold-1 spectrum reports over a t grid; count = m_q + extra.
std::vector<SpectrumReport> gap_report(SpectralWorkspace& ws,
                                       const std::vector<CriticalPoint>& cps, int q,
                                       const std::vector<double>& t_grid,
                                       bool require_gap_at_end = false);

// ---------------------------------------------------------------------------
// comparison maps
// ---------------------------------------------------------------------------

struct JMap {
    int q = 0;
    double t = 0;
    double eta = 0;
    std::vector<int> cp_ids;        // index-q critical points, row order
    std::vector<GridForm> columns;  // unit L2 norm, disjoint supports
    std::vector<double> grid_norms; // quadrature check of the unit normalization
};

// Transplanted cutoff Gaussians through the Hessian-eigenframe charts.
JMap build_J(WittenOps& wops, const std::vector<CriticalPoint>& cps, int q, double t,
             double eta);

struct Isometry {
    int q = 0;
    double t = 0;
    std::vector<int> cp_ids;
    std::vector<GridForm> columns;  // J-polar columns U_y, unit L2 norm
    Eigen::MatrixXd gram_before;    // Gram of Q J (RankDeficient if singular)
    double defect_l2 = 0;           // max_y ||Q J e_y - J e_y||
    double defect_sup = 0;          // sup-norm version of the defect
};

Isometry build_isometry(WittenOps& wops, SpectralWorkspace& ws,
                        const std::vector<CriticalPoint>& cps, int q, double t, double eta);

// sup of the pointwise fiber norm outside the radius-rho ball at the column's
// critical point (the far-field localization of U_y)
double far_field_sup(const WittenOps& wops, const GridForm& u, const Eigen::VectorXd& center,
                     double rho);

struct ComparisonReport {
    int q = 0;
    double t = 0;
    int m = 0;
    int grid_res = 0;
    Eigen::MatrixXd matrix;   // rows: cells x, cols: isometry columns y
    double deviation = 0;     // max |L - Id|
    double diag_err = 0;
    double offdiag_max = 0;
    double defect_l2 = 0;     // carried over from the isometry
    double eta = 0;
};

// Entry (x, y): (pi/t)^{(n-2q)/4} kappa_x^{-1} e^{-t h(x)} Int_{W_x^-} e^{t h} U_y,
// with kappa_x the quartic root of the stable/unstable Hessian determinant
// ratio at x (unity in exactly admissible charts). Exponentials are combined
// in log space before exponentiation.
ComparisonReport comparison_matrix(WittenOps& wops, SpectralWorkspace& ws, const MorseFlow& mf,
                                   int q, double t, double eta,
                                   const CellOptions& copt = {});

// residual of d(t)-closure of the small subspace, plus its cohomology ranks
struct ClosureReport {
    int q = 0;
    double t = 0;
    double residual = 0; // max relative component of d(t) psi outside the small space
    std::vector<int> small_betti; // filled when computed for the full ladder
};
ClosureReport small_complex_closure(SpectralWorkspace& ws,
                                    const std::vector<CriticalPoint>& cps, int q, double t);

// ranks of the small complex across all degrees -> Betti numbers
std::vector<int> small_complex_betti(SpectralWorkspace& ws,
                                     const std::vector<CriticalPoint>& cps, double t);

// ---------------------------------------------------------------------------
// the two-subspace gap criterion for a dense symmetric matrix
// ---------------------------------------------------------------------------
// Checks the hypotheses (Rayleigh bound a on H1, b on H2, H1 + H2 = whole
// space, trivial intersection) and then asserts spectrum(A) misses (a, b);
// ConfigError when the hypotheses fail. The brute-force eigensolve is the
// oracle against which the subspace criterion is compared.
bool verify_gap_lemma(const Eigen::MatrixXd& A, const Eigen::MatrixXd& H1,
                      const Eigen::MatrixXd& H2, double a, double b);

} // namespace whs
