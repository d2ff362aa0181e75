#include "whs/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>

#include "whs/fail.hpp"
#include "whs/oscillator.hpp"

namespace whs {

// ---------------------------------------------------------------------------
// operator handle
// ---------------------------------------------------------------------------

WittenOperatorHandle::WittenOperatorHandle(WittenOps& wops, int q, double t,
                                           double selfadjoint_tol)
    : wops_(wops), q_(q), t_(t) {
    const TorusModel& model = wops.model();
    dim_ = binomial(model.n, q) * model.total_points();
    wops.check_resolution(t);

    double mean_g2 = 0;
    for (double v : wops.grad_sq_field()) mean_g2 += v;
    mean_g2 /= wops.grad_sq_field().size();
    shift_ = 1.0 + t + t * t * mean_g2;

    // self-adjointness probe
    Rng rng(0xc0ffee ^ static_cast<uint64_t>(q * 1315423911) ^
            static_cast<uint64_t>(t * 1048576));
    int kmax = std::max(2, model.grid_res / 6);
    for (int probe = 0; probe < 2; ++probe) {
        GridForm w = random_bandlimited_form(model, q, kmax, rng, 3);
        GridForm v = random_bandlimited_form(model, q, kmax, rng, 3);
        GridForm Aw = wops.laplacian(w, t);
        GridForm Av = wops.laplacian(v, t);
        double lhs = wops.ops().inner_product(Aw, v);
        double rhs = wops.ops().inner_product(w, Av);
        double scale = std::max(1e-300, wops.ops().norm(w) * wops.ops().norm(v));
        if (std::abs(lhs - rhs) > selfadjoint_tol * scale)
            throw Error("selfadjointness_probe_failed",
                        "Witten operator failed the self-adjointness probe: |" +
                            format_double(lhs) + " - " + format_double(rhs) + "|");
    }
}

Eigen::VectorXd WittenOperatorHandle::flatten(const GridForm& w) const {
    Eigen::VectorXd v(dim_);
    long off = 0;
    for (const auto& c : w.comps) {
        for (double x : c) v[off++] = x;
    }
    return v;
}

GridForm WittenOperatorHandle::unflatten(const Eigen::VectorXd& v) const {
    GridForm w(wops_.model(), q_);
    long off = 0;
    for (auto& c : w.comps)
        for (auto& x : c) x = v[off++];
    return w;
}

LinOp WittenOperatorHandle::op() {
    LinOp a;
    a.dim = dim_;
    a.apply = [this](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        GridForm w = unflatten(in);
        GridForm r = wops_.laplacian(w, t_);
        out = flatten(r);
    };
    return a;
}

LinOp WittenOperatorHandle::preconditioner() {
    LinOp m;
    m.dim = dim_;
    m.apply = [this](const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        GridForm w = unflatten(in);
        SpectralGrid& g = wops_.ops().grid;
        const int n = wops_.model().n;
        const int N = wops_.model().grid_res;
        for (auto& comp : w.comps) {
            auto c = g.forward(comp);
            long tot = g.total();
            for (long i = 0; i < tot; ++i) {
                long rem = i;
                double k2 = 0;
                for (int a = n - 1; a >= 0; --a) {
                    int idx = static_cast<int>(rem % N);
                    rem /= N;
                    double k = g.wavenumber(idx);
                    k2 += k * k;
                }
                c[i] /= (kTwoPi * kTwoPi * k2 + shift_);
            }
            comp = g.inverse(c);
        }
        out = flatten(w);
    };
    return m;
}

// ---------------------------------------------------------------------------
// workspace
// ---------------------------------------------------------------------------

SpectralWorkspace::SpectralWorkspace(const TorusModel& base, const MorseFunctionSpec& spec,
                                     const SpectralOptions& opt)
    : base_(base), spec_(spec), opt_(opt) {}

WittenOps& SpectralWorkspace::ops_at(int grid_res) {
    auto it = ops_.find(grid_res);
    if (it == ops_.end()) {
        TorusModel m(base_.n, grid_res);
        it = ops_.emplace(grid_res, std::make_unique<WittenOps>(m, spec_, opt_.dealias)).first;
    }
    return *it->second;
}

int SpectralWorkspace::resolution_for(double t) {
    if (!opt_.auto_resolution) return base_.grid_res;
    auto it = res_cache_.find(t);
    if (it != res_cache_.end()) return it->second;
    int need = WittenOps::required_resolution(base_, spec_, t);
    int res = std::max(base_.grid_res, need);
    res_cache_[t] = res;
    return res;
}

namespace {
long t_bits(double t) {
    long b;
    static_assert(sizeof(double) == sizeof(long));
    std::memcpy(&b, &t, sizeof(double));
    return b;
}
} // namespace

const SpectralWorkspace::Solve& SpectralWorkspace::solve(int q, double t, int count) {
    auto key = std::make_pair(q, t_bits(t));
    auto it = cache_.find(key);
    if (it != cache_.end() && it->second.values.size() >= count) return it->second;

    int res = resolution_for(t);
    WittenOps& wops = ops_at(res);
    WittenOperatorHandle handle(wops, q, t);
    LinOp A = handle.op();

    Solve s;
    s.q = q;
    s.t = t;
    s.grid_res = res;

    if (A.dim <= opt_.dense_dim_limit) {
        EigResult r = dense_lowest(A, count);
        s.values = r.values;
        s.vectors = r.vectors;
        s.iterations = 1;
    } else {
        // warm start: nearest previous t for this q at the same resolution
        const Solve* prev = nullptr;
        for (const auto& [k, v] : cache_) {
            if (k.first != q) continue;
            if (v.grid_res != res) continue;
            if (v.t < t && (!prev || v.t > prev->t)) prev = &v;
        }
        Eigen::MatrixXd warm;
        if (prev) warm = prev->vectors;
        LinOp M = handle.preconditioner();
        EigOptions eo;
        eo.tol = opt_.eigen_tol;
        eo.max_iter = 3000;
        eo.block_extra = std::max(4, count / 2);
        eo.seed = opt_.seed ^ (uint64_t(q) << 32) ^ uint64_t(t_bits(t)) ^ uint64_t(res);
        EigResult r = lobpcg(A, &M, count, eo, prev ? &warm : nullptr);
        s.values = r.values;
        s.vectors = r.vectors;
        s.iterations = r.iterations;
    }
    auto [ins, ok] = cache_.insert_or_assign(key, std::move(s));
    return ins->second;
}

std::vector<GridForm> SpectralWorkspace::small_eigenforms(int q, double t, int count) {
    const Solve& s = solve(q, t, count);
    WittenOps& wops = ops_at(s.grid_res);
    WittenOperatorHandle handle(wops, q, t);
    std::vector<GridForm> out;
    double cellvol = wops.model().cell_volume();
    for (int c = 0; c < s.values.size(); ++c) {
        if (s.values[c] >= 1.0) break;
        GridForm w = handle.unflatten(s.vectors.col(c));
        w *= 1.0 / std::sqrt(cellvol); // Euclidean-orthonormal -> unit L2
        out.push_back(std::move(w));
    }
    return out;
}

GapFits fit_gap_sweep(const std::vector<SpectrumReport>& reports) {
    GapFits f;
    std::vector<double> ts, decay, ts2, growth;
    for (const auto& r : reports) {
        if (r.small_count > 0) {
            ts.push_back(r.t);
            decay.push_back(-std::log(std::max(r.gap_low, 1e-300)));
        }
        if (r.small_count < static_cast<int>(r.eigenvalues.size())) {
            ts2.push_back(r.t);
            growth.push_back(r.gap_high);
        }
    }
    f.decay = fit_line(ts, decay);
    f.growth = fit_line(ts2, growth);
    return f;
}

std::vector<SpectrumReport> gap_report(SpectralWorkspace& ws,
                                       const std::vector<CriticalPoint>& cps, int q,
                                       const std::vector<double>& t_grid, bool require_gap) {
    int m_q = 0;
    for (const auto& cp : cps)
        if (cp.index == q) ++m_q;
    const int count = m_q + ws.options().extra_eigenvalues;

    std::vector<SpectrumReport> reports;
    for (double t : t_grid) {
        const auto& s = ws.solve(q, t, count);
        SpectrumReport rep;
        rep.q = q;
        rep.t = t;
        rep.grid_res = s.grid_res;
        rep.expected_small = m_q;
        rep.eigenvalues.assign(s.values.data(), s.values.data() + s.values.size());
        rep.iterations = s.iterations;
        for (double lam : rep.eigenvalues)
            if (lam < 1.0) ++rep.small_count;
        rep.gap_low = rep.small_count > 0 ? rep.eigenvalues[rep.small_count - 1] : 0.0;
        rep.gap_high = rep.small_count < static_cast<int>(rep.eigenvalues.size())
                           ? rep.eigenvalues[rep.small_count]
                           : std::nan("");
        reports.push_back(std::move(rep));
    }
    if (require_gap && !reports.empty()) {
        const auto& last = reports.back();
        if (last.small_count != m_q)
            throw GapNotOpen("small cluster holds " + std::to_string(last.small_count) +
                             " eigenvalues, census expects " + std::to_string(m_q) +
                             " at t = " + format_double(last.t));
    }
    return reports;
}

// ---------------------------------------------------------------------------
// J map
// ---------------------------------------------------------------------------

namespace {

// quadrature norm of gamma_eta(|s|) exp(-t s^T A s) over the eta ball, in the
// eigenbasis of A (lams are the |Hessian| eigenvalues)
double anisotropic_cutoff_norm(int n, double t, double eta, const Eigen::VectorXd& lams) {
    if (n == 1) {
        auto f = [&](double u) {
            double g = cutoff_profile(std::abs(u), eta);
            return g * g * std::exp(-t * lams[0] * u * u);
        };
        return std::sqrt(integrate_gl(f, -eta, eta, 48, 8));
    }
    if (n == 2) {
        const int MA = 96;
        auto f = [&](double r) {
            double g = cutoff_profile(r, eta);
            double ang = 0;
            for (int ia = 0; ia < MA; ++ia) {
                double th = (ia + 0.5) * kTwoPi / MA;
                double cs = std::cos(th), sn = std::sin(th);
                ang += std::exp(-t * r * r * (lams[0] * cs * cs + lams[1] * sn * sn));
            }
            ang *= kTwoPi / MA;
            return g * g * r * ang;
        };
        return std::sqrt(integrate_gl(f, 0.0, eta, 48, 8));
    }
    throw ConfigError("anisotropic_cutoff_norm: n > 2 unsupported");
}

} // namespace

JMap build_J(WittenOps& wops, const std::vector<CriticalPoint>& cps, int q, double t,
             double eta) {
    const TorusModel& model = wops.model();
    const int n = model.n;
    double dmin = min_critical_distance(cps);
    if (!(eta < 0.5 * dmin))
        throw SupportOverlap("eta = " + format_double(eta) +
                             " violates disjointness (half min distance " +
                             format_double(0.5 * dmin) + ")");

    JMap jm;
    jm.q = q;
    jm.t = t;
    jm.eta = eta;
    const auto& fb = FiberBasis::get(n, q);
    const long tot = model.total_points();

    for (size_t ci = 0; ci < cps.size(); ++ci) {
        const CriticalPoint& y = cps[ci];
        if (y.index != q) continue;
        jm.cp_ids.push_back(static_cast<int>(ci));

        // full eigenframe and |eigenvalue| weights
        Eigen::MatrixXd V(n, n);
        Eigen::VectorXd lam(n);
        for (int c = 0; c < y.index; ++c) {
            V.col(c) = y.unstable_frame.col(c);
            lam[c] = std::abs(y.hessian_eigs[c]);
        }
        for (int c = y.index; c < n; ++c) {
            V.col(c) = y.stable_frame.col(c - y.index);
            lam[c] = std::abs(y.hessian_eigs[c]);
        }

        // fiber coefficients of the unstable coframe wedge
        std::vector<double> fiber_coeff(fb.count(), 0.0);
        if (q == 0) {
            fiber_coeff[0] = 1.0;
        } else {
            for (int f = 0; f < fb.count(); ++f) {
                Eigen::MatrixXd Mm(q, q);
                for (int r = 0; r < q; ++r)
                    for (int c = 0; c < q; ++c)
                        Mm(r, c) = y.unstable_frame(fb.tuples[f][c], r);
                fiber_coeff[f] = Mm.determinant();
            }
        }

        double norm = anisotropic_cutoff_norm(n, t, eta, lam);
        double scale = 1.0 / norm;

        GridForm col(model, q);
        for (long i = 0; i < tot; ++i) {
            Eigen::VectorXd x = grid_point(model, i);
            Eigen::VectorXd disp(n);
            for (int a = 0; a < n; ++a) disp[a] = torus_wrap(x[a] - y.position[a]);
            double r = disp.norm();
            if (r >= eta) continue;
            Eigen::VectorXd u = V.transpose() * disp;
            double quad = 0;
            for (int a = 0; a < n; ++a) quad += lam[a] * u[a] * u[a];
            double val = scale * cutoff_profile(r, eta) * std::exp(-0.5 * t * quad);
            for (int f = 0; f < fb.count(); ++f)
                if (fiber_coeff[f] != 0.0) col.comps[f][i] = fiber_coeff[f] * val;
        }
        jm.grid_norms.push_back(wops.ops().norm(col));
        jm.columns.push_back(std::move(col));
    }
    return jm;
}

// ---------------------------------------------------------------------------
// polar isometry
// ---------------------------------------------------------------------------

Isometry build_isometry(WittenOps& wops, SpectralWorkspace& ws,
                        const std::vector<CriticalPoint>& cps, int q, double t, double eta) {
    JMap jm = build_J(wops, cps, q, t, eta);
    const int m = static_cast<int>(jm.columns.size());
    if (m == 0) throw ConfigError("build_isometry: no index-" + std::to_string(q) + " points");

    std::vector<GridForm> psi = ws.small_eigenforms(q, t, m + ws.options().extra_eigenvalues);
    if (static_cast<int>(psi.size()) != m)
        throw RankDeficient("small subspace dimension " + std::to_string(psi.size()) +
                            " != m_q = " + std::to_string(m) + " at t = " + format_double(t));

    FormOps& ops = wops.ops();
    Eigen::MatrixXd C(m, m); // coordinates of Q J in the small eigenbasis
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) C(i, j) = ops.inner_product(psi[i], jm.columns[j]);

    Eigen::MatrixXd G = C.transpose() * C;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.eigenvalues()[0] < 1e-8)
        throw RankDeficient("Gram of the projected map is singular: min eig " +
                            format_double(es.eigenvalues()[0]));
    Eigen::MatrixXd Ginvsqrt = es.eigenvectors() *
                               es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                               es.eigenvectors().transpose();
    Eigen::MatrixXd U = C * Ginvsqrt; // coordinates of the polar columns

    Isometry iso;
    iso.q = q;
    iso.t = t;
    iso.cp_ids = jm.cp_ids;
    iso.gram_before = G;

    for (int j = 0; j < m; ++j) {
        GridForm col(wops.model(), q);
        for (int i = 0; i < m; ++i) col += U(i, j) * psi[i];
        iso.columns.push_back(std::move(col));
    }

    // defect ||Q J - J||: projection coordinates vs unit columns
    double dl2 = 0, dsup = 0;
    for (int j = 0; j < m; ++j) {
        GridForm proj(wops.model(), q);
        for (int i = 0; i < m; ++i) proj += C(i, j) * psi[i];
        GridForm diff = proj - jm.columns[j];
        dl2 = std::max(dl2, ops.norm(diff));
        // pointwise fiber norm sup
        double s = 0;
        for (long i = 0; i < diff.points(); ++i) {
            double v = 0;
            for (int f = 0; f < diff.fibers(); ++f) v += diff.comps[f][i] * diff.comps[f][i];
            s = std::max(s, v);
        }
        dsup = std::max(dsup, std::sqrt(s));
    }
    iso.defect_l2 = dl2;
    iso.defect_sup = dsup;
    return iso;
}

double far_field_sup(const WittenOps& wops, const GridForm& u, const Eigen::VectorXd& center,
                     double rho) {
    const TorusModel& model = wops.model();
    double sup = 0;
    for (long i = 0; i < u.points(); ++i) {
        Eigen::VectorXd x = grid_point(model, i);
        double d = 0;
        for (int a = 0; a < model.n; ++a) {
            double w = torus_wrap(x[a] - center[a]);
            d += w * w;
        }
        if (std::sqrt(d) <= rho) continue;
        double v = 0;
        for (int f = 0; f < u.fibers(); ++f) v += u.comps[f][i] * u.comps[f][i];
        sup = std::max(sup, std::sqrt(v));
    }
    return sup;
}

// ---------------------------------------------------------------------------
// comparison matrix
// ---------------------------------------------------------------------------

ComparisonReport comparison_matrix(WittenOps& wops, SpectralWorkspace& ws, const MorseFlow& mf,
                                   int q, double t, double eta, const CellOptions& copt) {
    const TorusModel& model = wops.model();
    const int n = model.n;
    const auto& cps = mf.critical_points();

    Isometry iso = build_isometry(wops, ws, cps, q, t, eta);
    const int m = static_cast<int>(iso.cp_ids.size());

    ComparisonReport rep;
    rep.q = q;
    rep.t = t;
    rep.m = m;
    rep.grid_res = model.grid_res;
    rep.eta = eta;
    rep.defect_l2 = iso.defect_l2;
    rep.matrix.resize(m, m);

    CellOptions co = copt;
    co.feature_length = std::min(co.feature_length, 1.0 / std::sqrt(t * wops.max_hessian_eig()));

    for (int r = 0; r < m; ++r) {
        const CriticalPoint& x = cps[iso.cp_ids[r]];
        // kappa_x^{-1} = (prod |unstable| / prod stable)^{1/4}
        double log_kinv = 0;
        for (int a = 0; a < x.index; ++a) log_kinv += 0.25 * std::log(std::abs(x.hessian_eigs[a]));
        for (int a = x.index; a < n; ++a) log_kinv -= 0.25 * std::log(x.hessian_eigs[a]);
        double log_scale = 0.25 * (n - 2 * q) * std::log(M_PI / t) + log_kinv;
        double scale = std::exp(log_scale);

        UnstableCell cell = build_unstable_cell(mf, iso.cp_ids[r], co);
        for (int c = 0; c < m; ++c) {
            double raw;
            if (cell.whole_manifold) {
                std::vector<double> weight(wops.h_field().size());
                for (size_t i = 0; i < weight.size(); ++i)
                    weight[i] = std::exp(t * (wops.h_field()[i] - x.value));
                raw = integrate_top_cell_grid(wops.ops(), iso.columns[c], cell, &weight);
            } else if (cell.dim == 0) {
                FormSampler s = make_sampler(model, wops.ops().grid, iso.columns[c]);
                double v = 0;
                s.eval(x.position, &v);
                raw = v; // e^{t(h - h(x))} = 1 at x itself
            } else {
                FormSampler base = make_sampler(model, wops.ops().grid, iso.columns[c]);
                FormSampler weighted = weighted_sampler(model, mf.spec(), base, t, x.value);
                raw = integrate_over_unstable(mf, cell, weighted, co);
            }
            rep.matrix(r, c) = scale * raw;
        }
    }

    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            double dev = std::abs(rep.matrix(r, c) - (r == c ? 1.0 : 0.0));
            rep.deviation = std::max(rep.deviation, dev);
            if (r == c)
                rep.diag_err = std::max(rep.diag_err, dev);
            else
                rep.offdiag_max = std::max(rep.offdiag_max, dev);
        }
    return rep;
}

// ---------------------------------------------------------------------------
// small-complex closure
// ---------------------------------------------------------------------------

ClosureReport small_complex_closure(SpectralWorkspace& ws,
                                    const std::vector<CriticalPoint>& cps, int q, double t) {
    ClosureReport rep;
    rep.q = q;
    rep.t = t;
    int m_q = 0, m_q1 = 0;
    for (const auto& cp : cps) {
        if (cp.index == q) ++m_q;
        if (cp.index == q + 1) ++m_q1;
    }
    auto psi_q = ws.small_eigenforms(q, t, m_q + ws.options().extra_eigenvalues);
    const int res = ws.solve(q, t, m_q + ws.options().extra_eigenvalues).grid_res;
    WittenOps& wops = ws.ops_at(res);
    FormOps& ops = wops.ops();

    std::vector<GridForm> psi_up;
    if (q + 1 <= ws.base_model().n)
        psi_up = ws.small_eigenforms(q + 1, t, m_q1 + ws.options().extra_eigenvalues);

    double worst = 0;
    for (const auto& p : psi_q) {
        GridForm dp = wops.witten_d(p, t);
        double total = ops.norm(dp);
        if (total < 1e-12) continue;
        GridForm proj(wops.model(), q + 1);
        for (const auto& u : psi_up) proj += ops.inner_product(u, dp) * u;
        GridForm residual = dp - proj;
        worst = std::max(worst, ops.norm(residual) / total);
    }
    rep.residual = worst;
    return rep;
}

std::vector<int> small_complex_betti(SpectralWorkspace& ws,
                                     const std::vector<CriticalPoint>& cps, double t) {
    const int n = ws.base_model().n;
    std::vector<int> m(n + 1, 0);
    for (const auto& cp : cps) ++m[cp.index];

    std::vector<std::vector<GridForm>> psi(n + 1);
    for (int q = 0; q <= n; ++q)
        psi[q] = ws.small_eigenforms(q, t, m[q] + ws.options().extra_eigenvalues);

    std::vector<int> ranks(n, 0);
    for (int q = 0; q < n; ++q) {
        if (psi[q].empty() || psi[q + 1].empty()) continue;
        const int res = ws.solve(q, t, m[q] + ws.options().extra_eigenvalues).grid_res;
        WittenOps& wops = ws.ops_at(res);
        Eigen::MatrixXd D(psi[q + 1].size(), psi[q].size());
        for (size_t j = 0; j < psi[q].size(); ++j) {
            GridForm dp = wops.witten_d(psi[q][j], t);
            for (size_t i = 0; i < psi[q + 1].size(); ++i)
                D(i, j) = wops.ops().inner_product(psi[q + 1][i], dp);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(D);
        double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > std::max(1e-6, 1e-6 * smax)) ++ranks[q];
    }
    std::vector<int> betti(n + 1, 0);
    for (int q = 0; q <= n; ++q) {
        int out = q < n ? ranks[q] : 0;
        int in = q > 0 ? ranks[q - 1] : 0;
        betti[q] = static_cast<int>(psi[q].size()) - out - in;
    }
    return betti;
}

// ---------------------------------------------------------------------------
// gap lemma
// ---------------------------------------------------------------------------

bool verify_gap_lemma(const Eigen::MatrixXd& A, const Eigen::MatrixXd& H1,
                      const Eigen::MatrixXd& H2, double a, double b) {
    const int dim = static_cast<int>(A.rows());
    if (!(0 < a && a < b)) throw ConfigError("verify_gap_lemma: need 0 < a < b");

    auto rayleigh_extreme = [&](const Eigen::MatrixXd& B, bool maximum) {
        Eigen::MatrixXd S = B.transpose() * B;
        Eigen::MatrixXd H = B.transpose() * A * B;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
            0.5 * (H + H.transpose()), 0.5 * (S + S.transpose()));
        return maximum ? ges.eigenvalues().maxCoeff() : ges.eigenvalues().minCoeff();
    };
    double max1 = rayleigh_extreme(H1, true);
    double min2 = rayleigh_extreme(H2, false);
    if (max1 > a)
        throw ConfigError("verify_gap_lemma: quadratic form exceeds a on H1 (" +
                          format_double(max1) + " > " + format_double(a) + ")");
    if (min2 < b)
        throw ConfigError("verify_gap_lemma: quadratic form drops below b on H2 (" +
                          format_double(min2) + " < " + format_double(b) + ")");

    Eigen::MatrixXd joint(dim, H1.cols() + H2.cols());
    joint.leftCols(H1.cols()) = H1;
    joint.rightCols(H2.cols()) = H2;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(joint);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > 1e-10 * svd.singularValues()[0]) ++rank;
    if (rank != dim || H1.cols() + H2.cols() != dim)
        throw ConfigError("verify_gap_lemma: H1 + H2 must split the space with trivial overlap");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    for (int i = 0; i < dim; ++i) {
        double lam = es.eigenvalues()[i];
        if (lam > a + 1e-12 && lam < b - 1e-12) return false;
    }
    return true;
}

} // namespace whs
