#include "whs/forms.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "whs/fail.hpp"

namespace whs {

GridForm::GridForm(const TorusModel& model, int degree) {
    n = model.n;
    q = degree;
    res = model.grid_res;
    if (degree >= 0 && degree <= n) {
        const auto& fb = FiberBasis::get(n, degree);
        comps.assign(fb.count(), std::vector<double>(points(), 0.0));
    }
}

GridForm& GridForm::operator+=(const GridForm& o) {
    for (size_t f = 0; f < comps.size(); ++f)
        for (size_t i = 0; i < comps[f].size(); ++i) comps[f][i] += o.comps[f][i];
    return *this;
}
GridForm& GridForm::operator-=(const GridForm& o) {
    for (size_t f = 0; f < comps.size(); ++f)
        for (size_t i = 0; i < comps[f].size(); ++i) comps[f][i] -= o.comps[f][i];
    return *this;
}
GridForm& GridForm::operator*=(double s) {
    for (auto& c : comps)
        for (auto& v : c) v *= s;
    return *this;
}
GridForm operator+(GridForm a, const GridForm& b) { return a += b; }
GridForm operator-(GridForm a, const GridForm& b) { return a -= b; }
GridForm operator*(double s, GridForm a) { return a *= s; }

FormOps::FormOps(const TorusModel& model_, bool dealias_products)
    : model(model_), dealias(dealias_products), grid(model_.n, model_.grid_res) {}

GridForm FormOps::d(const GridForm& w) {
    GridForm out(model, w.q + 1);
    if (w.q >= model.n) return out; // zero by contract
    const auto& fb_in = FiberBasis::get(model.n, w.q);
    const auto& fb_out = FiberBasis::get(model.n, w.q + 1);
    std::vector<std::vector<Complex>> acc(fb_out.count());
    for (int f = 0; f < fb_in.count(); ++f) {
        auto c = grid.forward(w.comps[f]);
        for (int axis = 0; axis < model.n; ++axis) {
            int sgn = wedge_sign(axis, fb_in.masks[f]);
            if (sgn == 0) continue;
            int fo = fb_out.index_of(fb_in.masks[f] | (1u << axis));
            auto dc = c;
            grid.apply_derivative(dc, axis);
            if (acc[fo].empty()) acc[fo].assign(dc.size(), Complex(0, 0));
            for (size_t i = 0; i < dc.size(); ++i) acc[fo][i] += double(sgn) * dc[i];
        }
    }
    for (int fo = 0; fo < fb_out.count(); ++fo)
        if (!acc[fo].empty()) out.comps[fo] = grid.inverse(acc[fo]);
    return out;
}

GridForm FormOps::hodge_star(const GridForm& w) const {
    GridForm out(model, model.n - w.q);
    const auto& fb_in = FiberBasis::get(model.n, w.q);
    const auto& fb_out = FiberBasis::get(model.n, model.n - w.q);
    const uint32_t full = (1u << model.n) - 1u;
    for (int f = 0; f < fb_in.count(); ++f) {
        int sgn = hodge_sign(model.n, fb_in.masks[f]);
        int fo = fb_out.index_of(full & ~fb_in.masks[f]);
        const auto& src = w.comps[f];
        auto& dst = out.comps[fo];
        for (size_t i = 0; i < src.size(); ++i) dst[i] = sgn * src[i];
    }
    return out;
}

GridForm FormOps::codifferential(const GridForm& w) {
    GridForm out(model, w.q - 1);
    if (w.q <= 0) return out; // zero by contract
    const int n = model.n;
    const int q = w.q - 1; // delta^{q+1} convention: input degree is q+1
    int sgn = ((n * q + 1) % 2 == 0) ? 1 : -1;
    GridForm s1 = hodge_star(w);
    GridForm ds = d(s1);
    GridForm s2 = hodge_star(ds);
    s2 *= double(sgn);
    return s2;
}

GridForm FormOps::contraction(const VectorFieldGrid& X, const GridForm& w) {
    GridForm out(model, w.q - 1);
    if (w.q <= 0) return out;
    const auto& fb_in = FiberBasis::get(model.n, w.q);
    const auto& fb_out = FiberBasis::get(model.n, w.q - 1);
    for (int f = 0; f < fb_in.count(); ++f) {
        for (int axis = 0; axis < model.n; ++axis) {
            int sgn = contraction_sign(axis, fb_in.masks[f]);
            if (sgn == 0) continue;
            int fo = fb_out.index_of(fb_in.masks[f] & ~(1u << axis));
            auto prod = product(X.comps[axis], w.comps[f]);
            auto& dst = out.comps[fo];
            for (size_t i = 0; i < prod.size(); ++i) dst[i] += sgn * prod[i];
        }
    }
    return out;
}

GridForm FormOps::exterior_mult(const GridForm& one_form, const GridForm& w) {
    if (one_form.q != 1) throw ConfigError("exterior_mult: first argument must be a 1-form");
    GridForm out(model, w.q + 1);
    if (w.q >= model.n) return out;
    const auto& fb_in = FiberBasis::get(model.n, w.q);
    const auto& fb_out = FiberBasis::get(model.n, w.q + 1);
    for (int f = 0; f < fb_in.count(); ++f) {
        for (int axis = 0; axis < model.n; ++axis) {
            int sgn = wedge_sign(axis, fb_in.masks[f]);
            if (sgn == 0) continue;
            int fo = fb_out.index_of(fb_in.masks[f] | (1u << axis));
            auto prod = product(one_form.comps[axis], w.comps[f]);
            auto& dst = out.comps[fo];
            for (size_t i = 0; i < prod.size(); ++i) dst[i] += sgn * prod[i];
        }
    }
    return out;
}

GridForm FormOps::lie_derivative(const VectorFieldGrid& X, const GridForm& w) {
    GridForm a = d(contraction(X, w));
    GridForm b = contraction(X, d(w));
    return a + b;
}

GridForm FormOps::lie_sharp(const VectorFieldGrid& X, const GridForm& w) {
    GridForm xf;
    xf.n = model.n;
    xf.q = 1;
    xf.res = model.grid_res;
    xf.comps = X.comps; // flat metric: X-flat has the same components
    GridForm a = exterior_mult(xf, codifferential(w));
    GridForm b = codifferential(exterior_mult(xf, w));
    return a + b;
}

double FormOps::inner_product(const GridForm& a, const GridForm& b) const {
    double s = 0;
    for (size_t f = 0; f < a.comps.size(); ++f)
        for (size_t i = 0; i < a.comps[f].size(); ++i) s += a.comps[f][i] * b.comps[f][i];
    return s * model.cell_volume();
}

std::vector<double> FormOps::fiber_product(const GridForm& a, const GridForm& b) const {
    std::vector<double> out(a.points(), 0.0);
    for (size_t f = 0; f < a.comps.size(); ++f)
        for (size_t i = 0; i < a.comps[f].size(); ++i) out[i] += a.comps[f][i] * b.comps[f][i];
    return out;
}

// ---------------------------------------------------------------------------
// WittenOps
// ---------------------------------------------------------------------------

WittenOps::WittenOps(const TorusModel& model, const MorseFunctionSpec& spec,
                     bool dealias_products)
    : ops_(model, dealias_products) {
    const int n = model.n;
    const long tot = model.total_points();
    h_.resize(tot);
    grad_.n = n;
    grad_.res = model.grid_res;
    grad_.comps.assign(n, std::vector<double>(tot));
    grad_sq_.assign(tot, 0.0);
    hess_.assign(n * (n + 1) / 2, std::vector<double>(tot));

    Eigen::VectorXd x(n);
    for (long i = 0; i < tot; ++i) {
        x = grid_point(model, i);
        h_[i] = eval_h(model, spec, x);
        Eigen::VectorXd g = grad_h(model, spec, x);
        for (int a = 0; a < n; ++a) grad_.comps[a][i] = g[a];
        grad_sq_[i] = g.squaredNorm();
        Eigen::MatrixXd H = hessian_h(model, spec, x);
        int idx = 0;
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) hess_[idx++][i] = H(a, b);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        hess_eig_max_ = std::max(hess_eig_max_, es.eigenvalues().cwiseAbs().maxCoeff());
    }

    dh_.n = n;
    dh_.q = 1;
    dh_.res = model.grid_res;
    dh_.comps = grad_.comps;

    v1_terms_.resize(n + 1);
}

namespace {
inline int hess_field_index(int n, int a, int b) {
    if (a > b) std::swap(a, b);
    // row-major upper triangle offsets
    int idx = 0;
    for (int r = 0; r < a; ++r) idx += n - r;
    return idx + (b - a);
}
} // namespace

const std::vector<WittenOps::V1Term>& WittenOps::v1_for_degree(int q) {
    auto& terms = v1_terms_[q];
    if (!terms.empty() || q < 0) return terms;
    const int n = ops_.model.n;
    const auto& fb = FiberBasis::get(n, q);
    // L_X + L_X-sharp for X = grad h is pointwise:
    //   2 sum_{ij} H_ij E_{dx_j} iota_i  -  tr(H) Id
    for (int f = 0; f < fb.count(); ++f) {
        uint32_t mask = fb.masks[f];
        for (int a = 0; a < n; ++a) { // trace part
            V1Term t;
            t.fiber_in = f;
            t.fiber_out = f;
            t.hess_field = hess_field_index(n, a, a);
            t.coeff = -1.0;
            terms.push_back(t);
        }
        for (int i = 0; i < n; ++i) {
            int cs = contraction_sign(i, mask);
            if (cs == 0) continue;
            uint32_t without = mask & ~(1u << i);
            for (int j = 0; j < n; ++j) {
                int ws = wedge_sign(j, without);
                if (ws == 0) continue;
                int fo = fb.index_of(without | (1u << j));
                V1Term t;
                t.fiber_in = f;
                t.fiber_out = fo;
                t.hess_field = hess_field_index(n, i, j);
                t.coeff = 2.0 * cs * ws;
                terms.push_back(t);
            }
        }
    }
    return terms;
}

GridForm WittenOps::witten_d(const GridForm& w, double t) {
    GridForm out = ops_.d(w);
    if (t != 0.0 && w.q < ops_.model.n) out += t * ops_.exterior_mult(dh_, w);
    return out;
}

GridForm WittenOps::witten_delta(const GridForm& w, double t) {
    GridForm out = ops_.codifferential(w);
    if (t != 0.0 && w.q > 0) out += t * ops_.contraction(grad_, w);
    return out;
}

GridForm WittenOps::witten_delta_star(const GridForm& w, double t) {
    if (w.q <= 0) return GridForm(ops_.model, w.q - 1);
    const int n = ops_.model.n;
    const int q = w.q - 1;
    int sgn = ((n * q + 1) % 2 == 0) ? 1 : -1;
    GridForm s1 = ops_.hodge_star(w);
    GridForm ds = witten_d(s1, t);
    GridForm s2 = ops_.hodge_star(ds);
    s2 *= double(sgn);
    return s2;
}

GridForm WittenOps::laplacian(const GridForm& w, double t) {
    GridForm a = witten_delta(witten_d(w, t), t);
    GridForm b = witten_d(witten_delta(w, t), t);
    return a + b;
}

GridForm WittenOps::zeroth_order_term(const GridForm& w) {
    GridForm out(ops_.model, w.q);
    const auto& terms = v1_for_degree(w.q);
    for (const auto& tm : terms) {
        const auto& hf = hess_[tm.hess_field];
        const auto& src = w.comps[tm.fiber_in];
        auto& dst = out.comps[tm.fiber_out];
        for (size_t i = 0; i < src.size(); ++i) dst[i] += tm.coeff * hf[i] * src[i];
    }
    return out;
}

GridForm WittenOps::laplacian_split(const GridForm& w, double t) {
    GridForm out = laplacian(w, 0.0);
    if (t != 0.0) {
        GridForm mid = zeroth_order_term(w);
        out += t * mid;
        GridForm pot(ops_.model, w.q);
        for (int f = 0; f < w.fibers(); ++f)
            for (size_t i = 0; i < w.comps[f].size(); ++i)
                pot.comps[f][i] = grad_sq_[i] * w.comps[f][i];
        out += (t * t) * pot;
    }
    return out;
}

void WittenOps::check_resolution(double t) const {
    if (t <= 0) return;
    double width = 1.0 / std::sqrt(t * hess_eig_max_);
    double spacing = 1.0 / ops_.model.grid_res;
    if (width < 4.0 * spacing)
        throw ResolutionTooCoarse(
            "Gaussian width " + format_double(width) + " below 4 grid spacings (res " +
            std::to_string(ops_.model.grid_res) + ", t " + format_double(t) + ")");
}

int WittenOps::required_resolution(const TorusModel& model, const MorseFunctionSpec& spec,
                                   double t) {
    // probe the Hessian spectral norm on a 64^n lattice
    const int probe = 64;
    long tot = 1;
    for (int i = 0; i < model.n; ++i) tot *= probe;
    double lam = 0;
    TorusModel pm(model.n, probe);
    for (long i = 0; i < tot; ++i) {
        Eigen::MatrixXd H = hessian_h(pm, spec, grid_point(pm, i));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        lam = std::max(lam, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    // smallest power of two with 4 / N <= (t lam)^{-1/2}
    int N = 8;
    while (N < 4096 && 4.0 / N > 1.0 / std::sqrt(std::max(1e-300, t * lam))) N *= 2;
    return N;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

void save_form(const std::string& path, const GridForm& w) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_form: cannot open " + path);
    const char magic[4] = {'G', 'F', 'R', 'M'};
    f.write(magic, 4);
    auto put_u32 = [&f](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(1u);
    put_u32(static_cast<uint32_t>(w.n));
    put_u32(static_cast<uint32_t>(w.q));
    put_u32(static_cast<uint32_t>(w.res));
    uint64_t fc = w.comps.size();
    f.write(reinterpret_cast<const char*>(&fc), 8);
    for (const auto& c : w.comps)
        f.write(reinterpret_cast<const char*>(c.data()),
                static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!f) throw IoError("save_form: write failed for " + path);
}

GridForm load_form(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_form: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "GFRM", 4) != 0)
        throw IoError("load_form: bad magic in " + path);
    auto get_u32 = [&f]() {
        uint32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    uint32_t version = get_u32();
    if (version != 1u) throw IoError("load_form: unsupported version");
    GridForm w;
    w.n = static_cast<int>(get_u32());
    w.q = static_cast<int>(get_u32());
    w.res = static_cast<int>(get_u32());
    uint64_t fc = 0;
    f.read(reinterpret_cast<char*>(&fc), 8);
    long pts = 1;
    for (int i = 0; i < w.n; ++i) pts *= w.res;
    w.comps.assign(fc, std::vector<double>(pts));
    for (auto& c : w.comps)
        f.read(reinterpret_cast<char*>(c.data()),
               static_cast<std::streamsize>(c.size() * sizeof(double)));
    if (!f) throw IoError("load_form: truncated file " + path);
    return w;
}

Eigen::VectorXd grid_point(const TorusModel& model, long flat_index) {
    Eigen::VectorXd x(model.n);
    long rem = flat_index;
    for (int a = model.n - 1; a >= 0; --a) {
        x[a] = double(rem % model.grid_res) / model.grid_res;
        rem /= model.grid_res;
    }
    return x;
}

GridForm random_bandlimited_form(const TorusModel& model, int q, int kmax, Rng& rng,
                                 int terms_per_fiber) {
    GridForm w(model, q);
    const long tot = model.total_points();
    for (auto& comp : w.comps) {
        for (int t = 0; t < terms_per_fiber; ++t) {
            std::vector<int> k(model.n);
            for (int a = 0; a < model.n; ++a) k[a] = rng.uniform_int(-kmax, kmax);
            double amp = rng.uniform(-1.0, 1.0);
            double phase = rng.uniform(0.0, kTwoPi);
            for (long i = 0; i < tot; ++i) {
                Eigen::VectorXd x = grid_point(model, i);
                double arg = phase;
                for (int a = 0; a < model.n; ++a) arg += kTwoPi * k[a] * x[a];
                comp[i] += amp * std::cos(arg);
            }
        }
    }
    return w;
}

} // namespace whs
