#include "whs/oscillator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "whs/fail.hpp"
#include "whs/util.hpp"

namespace whs {

int epsilon_coeff(const std::vector<int>& I, int q, int k, int n) {
    int b = 0;
    for (int i : I)
        if (i >= k + 1) ++b;
    return -n + 2 * k - 2 * q + 4 * b;
}

int epsilon_coeff_mask(uint32_t mask, int q, int k, int n) {
    int b = 0;
    for (int a = k; a < n; ++a) // 0-based axis a <-> label a+1 >= k+1
        if (mask & (1u << a)) ++b;
    return -n + 2 * k - 2 * q + 4 * b;
}

int epsilon_min(int q, int k, int n) {
    const auto& fb = FiberBasis::get(n, q);
    int m = 1 << 30;
    for (uint32_t mask : fb.masks) m = std::min(m, epsilon_coeff_mask(mask, q, k, n));
    return m;
}

std::vector<double> model_spectrum(const ModelOperator& op, int count) {
    if (op.t <= 0) throw ConfigError("model_spectrum: t must be > 0");
    const auto& fb = FiberBasis::get(op.n, op.q);
    std::vector<int> bases; // n + eps_I (even, >= 0)
    for (uint32_t mask : fb.masks)
        bases.push_back(op.n + epsilon_coeff_mask(mask, op.q, op.k, op.n));
    std::vector<double> out;
    for (int level = 0; static_cast<int>(out.size()) < count && level < 10000; level += 2) {
        long mult = 0;
        for (int base : bases) {
            if (level < base || (level - base) % 2 != 0) continue;
            int s = (level - base) / 2;
            mult += binomial(s + op.n - 1, op.n - 1);
        }
        for (long j = 0; j < mult && static_cast<int>(out.size()) < count; ++j)
            out.push_back(op.t * level);
    }
    return out;
}

int model_kernel_dim(const ModelOperator& op) { return op.q == op.k ? 1 : 0; }

double GroundState::value(const Eigen::VectorXd& x) const {
    return prefactor * std::exp(-0.5 * t * x.squaredNorm());
}
double GroundState::value_radial(double r) const {
    return prefactor * std::exp(-0.5 * t * r * r);
}

GroundState ground_state(int n, int q, double t) {
    GroundState g;
    g.n = n;
    g.q = q;
    g.t = t;
    g.prefactor = std::pow(t / M_PI, 0.25 * n);
    return g;
}

double cutoff_profile(double u, double eta) {
    if (u <= 0.5 * eta) return 1.0;
    if (u >= eta) return 0.0;
    double s = (u - 0.5 * eta) / (0.5 * eta);
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double cutoff_profile_d1(double u, double eta) {
    if (u <= 0.5 * eta || u >= eta) return 0.0;
    double s = (u - 0.5 * eta) / (0.5 * eta);
    return -30.0 * s * s * (1.0 - s) * (1.0 - s) / (0.5 * eta);
}

double cutoff_profile_d2(double u, double eta) {
    if (u <= 0.5 * eta || u >= eta) return 0.0;
    double s = (u - 0.5 * eta) / (0.5 * eta);
    return -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (0.25 * eta * eta);
}

namespace {
double sphere_area(int n) {
    // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}
} // namespace

double beta_normalizer(int n, int q, double t, double eta) {
    (void)q; // the normalizer is fiber independent
    auto f = [&](double r) {
        double g = cutoff_profile(r, eta);
        return g * g * std::exp(-t * r * r) * std::pow(r, n - 1);
    };
    double integral = sphere_area(n) *
                      (integrate_gl(f, 0.0, 0.5 * eta, 48, 8) + integrate_gl(f, 0.5 * eta, eta, 48, 8));
    return std::pow(t / M_PI, 0.25 * n) * std::sqrt(integral);
}

double CutoffGaussian::scalar_value(double r) const {
    return cutoff_profile(r, eta) * std::pow(t / M_PI, 0.25 * n) * std::exp(-0.5 * t * r * r) /
           beta;
}
double CutoffGaussian::value(const Eigen::VectorXd& x) const { return scalar_value(x.norm()); }

CutoffGaussian cutoff_state(int n, int q, double t, double eta) {
    CutoffGaussian c;
    c.n = n;
    c.q = q;
    c.t = t;
    c.eta = eta;
    c.beta = beta_normalizer(n, q, t, eta);
    return c;
}

// Radial form of the model operator on gamma(r) g(r) dx_I:
//   [-gamma'' - (n-1) gamma'/r + 2 t r gamma'] g + t (n + eps_I) gamma g
namespace {
double bridge_term(int n, double t, double eta, double r) {
    double d1 = cutoff_profile_d1(r, eta);
    double d2 = cutoff_profile_d2(r, eta);
    if (d1 == 0.0 && d2 == 0.0) return 0.0;
    return -d2 - (n - 1) * d1 / r + 2.0 * t * r * d1;
}
} // namespace

double cutoff_residual_sup(int n, int q, double t, double eta) {
    CutoffGaussian st = cutoff_state(n, q, t, eta);
    GroundState g = ground_state(n, q, t);
    double sup = 0;
    const int samples = 4000;
    for (int i = 0; i <= samples; ++i) {
        double r = 0.5 * eta + (0.5 * eta) * i / samples;
        double v = std::abs(bridge_term(n, t, eta, r)) * g.value_radial(r) / st.beta;
        sup = std::max(sup, v);
    }
    return sup;
}

double cutoff_rayleigh(const ModelOperator& op, double eta) {
    CutoffGaussian st = cutoff_state(op.n, op.q, op.t, eta);
    GroundState g = ground_state(op.n, op.q, op.t);
    std::vector<int> I;
    for (int i = 1; i <= op.q; ++i) I.push_back(i);
    const int eps = epsilon_coeff(I, op.q, op.k, op.n);
    const double t = op.t;
    const int n = op.n;
    auto f = [&](double r) {
        double gam = cutoff_profile(r, eta);
        double gg = g.value_radial(r);
        double val = bridge_term(n, t, eta, r) * gam + t * (n + eps) * gam * gam;
        return val * gg * gg * std::pow(r, n - 1);
    };
    double integral = sphere_area(n) *
                      (integrate_gl(f, 0.0, 0.5 * eta, 48, 8) + integrate_gl(f, 0.5 * eta, eta, 48, 8));
    return integral / (st.beta * st.beta);
}

// ---------------------------------------------------------------------------
// box discretization
// ---------------------------------------------------------------------------

LinOp BoxDiscretization::scalar_op() const {
    const int N = points;
    const int nn = n;
    const double h2 = spacing() * spacing();
    const long tot = total();
    std::vector<double> diagpot(tot);
    for (long i = 0; i < tot; ++i) {
        long rem = i;
        double r2 = 0;
        for (int a = nn - 1; a >= 0; --a) {
            int idx = static_cast<int>(rem % N);
            rem /= N;
            double x = coord(idx);
            r2 += x * x;
        }
        diagpot[i] = t * t * r2;
    }
    LinOp op;
    op.dim = tot;
    op.apply = [N, nn, h2, diagpot = std::move(diagpot), tot](const Eigen::VectorXd& in,
                                                              Eigen::VectorXd& out) {
        out.setZero();
        for (long i = 0; i < tot; ++i) out[i] = diagpot[i] * in[i];
        long stride = 1;
        for (int a = nn - 1; a >= 0; --a) {
            for (long i = 0; i < tot; ++i) {
                long idx = (i / stride) % N;
                double c = 30.0 * in[i];
                double s1 = 0, s2 = 0;
                if (idx >= 1) s1 += in[i - stride];
                if (idx + 1 < N) s1 += in[i + stride];
                if (idx >= 2) s2 += in[i - 2 * stride];
                if (idx + 2 < N) s2 += in[i + 2 * stride];
                out[i] += (c - 16.0 * s1 + s2) / (12.0 * h2);
            }
            stride *= N;
        }
    };
    return op;
}

std::vector<double> BoxDiscretization::scalar_spectrum(int count, double tol) const {
    LinOp A = scalar_op();
    if (A.dim <= 1500) {
        EigResult r = dense_lowest(A, count);
        return std::vector<double>(r.values.data(), r.values.data() + r.values.size());
    }
    // Jacobi-preconditioned LOBPCG; the diagonal is analytic
    const long tot = A.dim;
    Eigen::VectorXd diag(tot);
    {
        const double h2 = spacing() * spacing();
        double center = n * 30.0 / (12.0 * h2);
        for (long i = 0; i < tot; ++i) {
            long rem = i;
            double r2 = 0;
            for (int a = n - 1; a >= 0; --a) {
                int idx = static_cast<int>(rem % points);
                rem /= points;
                double x = coord(idx);
                r2 += x * x;
            }
            diag[i] = center + t * t * r2 + t;
        }
    }
    LinOp M;
    M.dim = tot;
    M.apply = [diag](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        out = in.cwiseQuotient(diag);
    };
    EigOptions opt;
    opt.tol = tol;
    opt.max_iter = 4000;
    opt.block_extra = 6;
    EigResult r = lobpcg(A, &M, count, opt);
    return std::vector<double>(r.values.data(), r.values.data() + r.values.size());
}

Eigen::VectorXd BoxDiscretization::sample_radial(const std::function<double(double)>& f) const {
    const long tot = total();
    Eigen::VectorXd v(tot);
    for (long i = 0; i < tot; ++i) {
        long rem = i;
        double r2 = 0;
        for (int a = n - 1; a >= 0; --a) {
            int idx = static_cast<int>(rem % points);
            rem /= points;
            double x = coord(idx);
            r2 += x * x;
        }
        v[i] = f(std::sqrt(r2));
    }
    return v;
}

BoxDiscretization default_box(int n, double t, double eta) {
    BoxDiscretization b;
    b.n = n;
    b.t = t;
    b.L = 8.0 / std::sqrt(t) + eta;
    // keep the state width resolved: ~18 points per t^{-1/2}, capped for n=2
    double width = 1.0 / std::sqrt(t);
    int pts = static_cast<int>(std::ceil(2.0 * b.L / (width / 9.0)));
    if (n >= 2) pts = std::min(pts, 110);
    pts = std::max(pts, 48);
    b.points = pts;
    return b;
}

std::vector<double> box_model_spectrum(const ModelOperator& op, int count, double rel_tol,
                                       double eta) {
    BoxDiscretization box = default_box(op.n, op.t, eta);
    std::vector<double> scalar = box.scalar_spectrum(count + 2);
    const auto& fb = FiberBasis::get(op.n, op.q);
    std::vector<double> all;
    for (uint32_t mask : fb.masks) {
        int eps = epsilon_coeff_mask(mask, op.q, op.k, op.n);
        for (double mu : scalar) all.push_back(mu + op.t * eps);
    }
    std::sort(all.begin(), all.end());
    if (static_cast<int>(all.size()) > count) all.resize(count);
    std::vector<double> closed = model_spectrum(op, count);
    for (int i = 0; i < count; ++i) {
        double ref = closed[i];
        if (std::abs(all[i] - ref) > rel_tol * std::max(std::abs(ref), 2.0 * op.t))
            throw TruncationWarning("box discretization disagrees with closed form at level " +
                                    std::to_string(i) + ": " + format_double(all[i]) + " vs " +
                                    format_double(ref));
    }
    return all;
}

double orthogonal_coercivity(int n, int q, double t, double eta) {
    BoxDiscretization box = default_box(n, t, eta);
    CutoffGaussian st = cutoff_state(n, q, t, eta);
    Eigen::VectorXd w = box.sample_radial([&](double r) { return st.scalar_value(r); });
    w.normalize();
    LinOp scalar = box.scalar_op();
    const double shift = -t * n; // eps for the ground fiber at q = k
    LinOp A;
    A.dim = scalar.dim;
    A.apply = [&scalar, shift](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        scalar.apply(in, out);
        out += shift * in;
    };
    double ground_fiber_min;
    if (A.dim <= 1500) {
        // dense with explicit deflation: A + big * w w^T pushes the state away
        Eigen::MatrixXd M(A.dim, A.dim);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(A.dim), col(A.dim);
        for (long j = 0; j < A.dim; ++j) {
            e[j] = 1.0;
            A.apply(e, col);
            M.col(j) = col;
            e[j] = 0.0;
        }
        M = 0.5 * (M + M.transpose()).eval();
        double big = 1e4 * std::max(1.0, M.diagonal().maxCoeff());
        M += big * (w * w.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
        ground_fiber_min = es.eigenvalues()[0];
    } else {
        Eigen::MatrixXd constraints = w;
        const double h2 = box.spacing() * box.spacing();
        double center = n * 30.0 / (12.0 * h2);
        Eigen::VectorXd diag = box.sample_radial(
            [&](double r) { return center + t * t * r * r + std::max(1.0, t); });
        LinOp M;
        M.dim = A.dim;
        M.apply = [diag](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
            out = in.cwiseQuotient(diag);
        };
        EigOptions opt;
        opt.tol = 1e-7;
        opt.block_extra = 5;
        opt.max_iter = 4000;
        EigResult r = lobpcg(A, &M, 1, opt, nullptr, &constraints);
        ground_fiber_min = r.values[0];
    }
    // other fibers are orthogonal to the state automatically
    double other = 1e300;
    const auto& fb = FiberBasis::get(n, q);
    uint32_t ground_mask = (q > 0) ? ((1u << q) - 1u) : 0u;
    for (uint32_t mask : fb.masks) {
        if (mask == ground_mask) continue;
        other = std::min(other, t * (n + epsilon_coeff_mask(mask, q, q, n)));
    }
    return std::min(ground_fiber_min, other);
}

} // namespace whs
