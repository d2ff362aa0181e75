#include "whs/torus.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "whs/fail.hpp"

namespace whs {

TorusModel::TorusModel(int n_, int grid_res_) : n(n_), grid_res(grid_res_) {
    if (n < 1) throw ConfigError("TorusModel: dimension must be >= 1");
    if (grid_res < 8) throw ConfigError("TorusModel: grid_res must be >= 8");
    if ((grid_res & (grid_res - 1)) != 0)
        throw ConfigError("TorusModel: grid_res must be a power of two");
}

int MorseFunctionSpec::max_abs_freq() const {
    int m = 0;
    for (const auto& t : terms)
        for (int f : t.freq) m = std::max(m, std::abs(f));
    return m;
}

std::string MorseFunctionSpec::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& t : terms)
        j.push_back({{"freq", t.freq}, {"amp", t.amp}, {"phase", t.phase}});
    return j.dump();
}

MorseFunctionSpec MorseFunctionSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MorseFunctionSpec spec;
    if (!j.is_array()) throw ConfigError("morse spec: expected an array of term records");
    for (size_t i = 0; i < j.size(); ++i) {
        const auto& rec = j[i];
        MorseTerm t;
        if (!rec.contains("freq") || !rec.contains("amp"))
            throw ConfigError("morse spec: term " + std::to_string(i) +
                              " must have fields freq and amp");
        t.freq = rec.at("freq").get<std::vector<int>>();
        t.amp = rec.at("amp").get<double>();
        t.phase = rec.value("phase", 0.0);
        spec.terms.push_back(std::move(t));
    }
    return spec;
}

double eval_h(const TorusModel& model, const MorseFunctionSpec& spec,
              const Eigen::VectorXd& point) {
    double v = 0;
    for (const auto& t : spec.terms) {
        double arg = t.phase;
        for (int i = 0; i < model.n; ++i) arg += kTwoPi * t.freq[i] * point[i];
        v += t.amp * std::cos(arg);
    }
    return v;
}

Eigen::VectorXd grad_h(const TorusModel& model, const MorseFunctionSpec& spec,
                       const Eigen::VectorXd& point) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(model.n);
    for (const auto& t : spec.terms) {
        double arg = t.phase;
        for (int i = 0; i < model.n; ++i) arg += kTwoPi * t.freq[i] * point[i];
        double s = -t.amp * std::sin(arg) * kTwoPi;
        for (int i = 0; i < model.n; ++i) g[i] += s * t.freq[i];
    }
    return g;
}

Eigen::MatrixXd hessian_h(const TorusModel& model, const MorseFunctionSpec& spec,
                          const Eigen::VectorXd& point) {
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(model.n, model.n);
    for (const auto& t : spec.terms) {
        double arg = t.phase;
        for (int i = 0; i < model.n; ++i) arg += kTwoPi * t.freq[i] * point[i];
        double c = -t.amp * std::cos(arg) * kTwoPi * kTwoPi;
        for (int i = 0; i < model.n; ++i)
            for (int j = 0; j < model.n; ++j) H(i, j) += c * t.freq[i] * t.freq[j];
    }
    return H;
}

namespace {

// deterministic sign convention: make the largest-magnitude component positive
void fix_eigenvector_signs(Eigen::MatrixXd& V) {
    for (int c = 0; c < V.cols(); ++c) {
        int imax = 0;
        for (int r = 1; r < V.rows(); ++r)
            if (std::abs(V(r, c)) > std::abs(V(imax, c))) imax = r;
        if (V(imax, c) < 0) V.col(c) = -V.col(c);
    }
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps) {
    for (int i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - eps) return true;
        if (a[i] > b[i] + eps) return false;
    }
    return false;
}

} // namespace

std::vector<CriticalPoint> find_critical_points(const TorusModel& model,
                                                const MorseFunctionSpec& spec,
                                                const CriticalPointOptions& opt) {
    if (opt.seeds_per_axis < 8)
        throw ConfigError("find_critical_points: seeds_per_axis must be >= 8");
    if (opt.tol <= 0) throw ConfigError("find_critical_points: tol must be > 0");

    const int n = model.n;
    long nseeds = 1;
    for (int i = 0; i < n; ++i) nseeds *= opt.seeds_per_axis;

    // scale for the degeneracy floor: max |Hessian entry| over a probe grid
    double hess_scale = 0;
    {
        int probe = std::max(8, opt.seeds_per_axis);
        long np = 1;
        for (int i = 0; i < n; ++i) np *= probe;
        Eigen::VectorXd x(n);
        for (long s = 0; s < np; ++s) {
            long r = s;
            for (int i = 0; i < n; ++i) {
                x[i] = double(r % probe) / probe;
                r /= probe;
            }
            hess_scale = std::max(hess_scale, hessian_h(model, spec, x).cwiseAbs().maxCoeff());
        }
    }
    if (hess_scale <= 0)
        throw DegenerateCritical("find_critical_points: h has identically zero Hessian");
    const double degen_floor = opt.degeneracy_rel * hess_scale;

    std::vector<Eigen::VectorXd> roots;
    int failed_seeds = 0;
    Eigen::VectorXd x(n);
    for (long s = 0; s < nseeds; ++s) {
        long r = s;
        for (int i = 0; i < n; ++i) {
            x[i] = (double(r % opt.seeds_per_axis) + 0.5) / opt.seeds_per_axis;
            r /= opt.seeds_per_axis;
        }
        Eigen::VectorXd y = x;
        bool converged = false;
        for (int it = 0; it < opt.max_newton_iters; ++it) {
            Eigen::VectorXd g = grad_h(model, spec, y);
            if (g.norm() < opt.tol) {
                converged = true;
                break;
            }
            Eigen::MatrixXd H = hessian_h(model, spec, y);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
            if (!lu.isInvertible()) break; // seed near a degenerate configuration
            Eigen::VectorXd step = lu.solve(g);
            double cap = 0.25; // keep Newton inside the basin scale
            if (step.norm() > cap) step *= cap / step.norm();
            y -= step;
            for (int i = 0; i < n; ++i) y[i] = torus_coord(y[i]);
        }
        if (!converged) {
            ++failed_seeds;
            continue;
        }
        bool dup = false;
        for (const auto& rt : roots) {
            double d = 0;
            for (int i = 0; i < n; ++i) {
                double w = torus_wrap(y[i] - rt[i]);
                d += w * w;
            }
            if (std::sqrt(d) < 10 * std::max(opt.tol, 1e-10)) {
                dup = true;
                break;
            }
        }
        if (!dup) roots.push_back(y);
    }

    if (roots.empty())
        throw NonConvergence("find_critical_points: no Newton seed converged");

    std::vector<CriticalPoint> cps;
    for (const auto& rt : roots) {
        CriticalPoint cp;
        cp.position = rt;
        for (int i = 0; i < n; ++i) cp.position[i] = torus_coord(cp.position[i]);
        cp.value = eval_h(model, spec, cp.position);
        cp.grad_norm = grad_h(model, spec, cp.position).norm();
        Eigen::MatrixXd H = hessian_h(model, spec, cp.position);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        cp.hessian_eigs = es.eigenvalues();
        for (int i = 0; i < n; ++i)
            if (std::abs(cp.hessian_eigs[i]) < degen_floor)
                throw DegenerateCritical("critical point has |Hessian eigenvalue| below floor");
        int k = 0;
        while (k < n && cp.hessian_eigs[k] < 0) ++k;
        cp.index = k;
        Eigen::MatrixXd V = es.eigenvectors();
        Eigen::MatrixXd Vu = V.leftCols(k);
        Eigen::MatrixXd Vs = V.rightCols(n - k);
        fix_eigenvector_signs(Vu);
        fix_eigenvector_signs(Vs);
        cp.unstable_frame = Vu;
        cp.stable_frame = Vs;
        cps.push_back(std::move(cp));
    }

    std::sort(cps.begin(), cps.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        if (a.index != b.index) return a.index < b.index;
        if (std::abs(a.value - b.value) > 1e-12) return a.value < b.value;
        return lex_less(a.position, b.position, 1e-10);
    });
    return cps;
}

double min_critical_distance(const std::vector<CriticalPoint>& cps) {
    double d = 1e300;
    for (size_t i = 0; i < cps.size(); ++i)
        for (size_t j = i + 1; j < cps.size(); ++j) {
            double s = 0;
            for (int k = 0; k < cps[i].position.size(); ++k) {
                double w = torus_wrap(cps[i].position[k] - cps[j].position[k]);
                s += w * w;
            }
            d = std::min(d, std::sqrt(s));
        }
    return d;
}

int euler_characteristic(const std::vector<CriticalPoint>& cps) {
    int chi = 0;
    for (const auto& cp : cps) chi += (cp.index % 2 == 0) ? 1 : -1;
    return chi;
}

} // namespace whs
