#include "whs/morse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "whs/fail.hpp"

namespace whs {

namespace {

// Dormand-Prince 5(4) tableau
struct Dp45 {
    static constexpr double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr double b5[7] = {35.0 / 384,     0.0,       500.0 / 1113, 125.0 / 192,
                                     -2187.0 / 6784, 11.0 / 84, 0.0};
    static constexpr double b4[7] = {5179.0 / 57600,    0.0,          7571.0 / 16695, 393.0 / 640,
                                     -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};
};
constexpr double Dp45::c[7];
constexpr double Dp45::a[7][6];
constexpr double Dp45::b5[7];
constexpr double Dp45::b4[7];

// One embedded step attempt. On acceptance fills `out` and `h_used`; always
// updates `h` with the proposed next (or retry) step.
template <typename Rhs>
bool dp45_step(const Rhs& rhs, const Eigen::VectorXd& y, double t, double& h, double& h_used,
               Eigen::VectorXd& out, double tol, int nx, double max_dx) {
    const int dim = static_cast<int>(y.size());
    Eigen::MatrixXd K(dim, 7);
    Eigen::VectorXd tmp(dim);
    const double h_try = h;
    K.col(0) = rhs(t, y);
    for (int s = 1; s < 7; ++s) {
        tmp = y;
        for (int j = 0; j < s; ++j)
            if (Dp45::a[s][j] != 0.0) tmp += h_try * Dp45::a[s][j] * K.col(j);
        K.col(s) = rhs(t + Dp45::c[s] * h_try, tmp);
    }
    Eigen::VectorXd y5 = y, y4 = y;
    for (int s = 0; s < 7; ++s) {
        if (Dp45::b5[s] != 0.0) y5 += h_try * Dp45::b5[s] * K.col(s);
        if (Dp45::b4[s] != 0.0) y4 += h_try * Dp45::b4[s] * K.col(s);
    }
    double err = 0;
    for (int i = 0; i < dim; ++i) {
        double sc = tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
        double e = (y5[i] - y4[i]) / sc;
        err += e * e;
    }
    err = std::sqrt(err / dim);
    double dx = (y5.head(nx) - y.head(nx)).norm();
    bool accept = err <= 1.0 && (max_dx <= 0 || dx <= max_dx);
    double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
    if (max_dx > 0 && dx > max_dx) fac = std::min(fac, 0.45 * max_dx / std::max(dx, 1e-300));
    fac = std::clamp(fac, 0.2, 5.0);
    h = h_try * fac;
    if (accept) {
        out = y5;
        h_used = h_try;
    }
    return accept;
}

// orientation-preserving orthonormalization (positive diagonal of R)
void gram_schmidt_positive(Eigen::Ref<Eigen::MatrixXd> U) {
    for (int c = 0; c < U.cols(); ++c) {
        for (int p = 0; p < c; ++p) U.col(c) -= U.col(p).dot(U.col(c)) * U.col(p);
        double nrm = U.col(c).norm();
        if (nrm < 1e-250) throw FrameDegeneracy("frame transport lost rank");
        U.col(c) /= nrm;
    }
}

} // namespace

MorseFlow::MorseFlow(const TorusModel& model, const MorseFunctionSpec& spec,
                     std::vector<CriticalPoint> cps)
    : model_(model), spec_(spec), cps_(std::move(cps)) {
    if (cps_.size() < 2)
        throw ConfigError("MorseFlow: a compact manifold carries at least a max and a min");
    min_dist_ = min_critical_distance(cps_);
    capture_radius_ = 0.05 * min_dist_;
}

Trajectory MorseFlow::integrate(const Eigen::VectorXd& start, const Eigen::MatrixXd* frame0,
                                std::vector<Eigen::MatrixXd>* frames,
                                const FlowOptions& opt) const {
    const int n = model_.n;
    const int m = frame0 ? static_cast<int>(frame0->cols()) : 0;
    const double cap = opt.capture_radius > 0 ? opt.capture_radius : capture_radius_;
    const double max_dx = opt.max_step_dx > 0 ? opt.max_step_dx : 0.5 * cap;
    const double sgn = opt.reverse ? 1.0 : -1.0;

    auto rhs = [&](double, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy(y.size());
        Eigen::VectorXd x = y.head(n);
        dy.head(n) = sgn * grad_h(model_, spec_, x);
        if (m > 0) {
            Eigen::MatrixXd H = hessian_h(model_, spec_, x);
            Eigen::Map<const Eigen::MatrixXd> U(y.data() + n, n, m);
            Eigen::Map<Eigen::MatrixXd> dU(dy.data() + n, n, m);
            dU = sgn * (H * U);
        }
        return dy;
    };

    Eigen::VectorXd y(n + n * m);
    y.head(n) = start;
    if (m > 0) Eigen::Map<Eigen::MatrixXd>(y.data() + n, n, m) = *frame0;

    Trajectory traj;
    traj.closest_approach.assign(cps_.size(), 1e300);
    auto dist_to_cp = [&](const Eigen::VectorXd& pos, size_t c) {
        double d = 0;
        for (int i = 0; i < n; ++i) {
            double w = torus_wrap(pos[i] - cps_[c].position[i]);
            d += w * w;
        }
        return std::sqrt(d);
    };
    auto record = [&](double t, const Eigen::VectorXd& st) {
        FlowSample fs;
        fs.time = t;
        fs.pos = st.head(n);
        for (int i = 0; i < n; ++i) fs.pos[i] = torus_coord(fs.pos[i]);
        fs.h = eval_h(model_, spec_, fs.pos);
        traj.samples.push_back(fs);
        if (frames) frames->push_back(Eigen::Map<const Eigen::MatrixXd>(st.data() + n, n, m));
        for (size_t c = 0; c < cps_.size(); ++c)
            traj.closest_approach[c] = std::min(traj.closest_approach[c], dist_to_cp(fs.pos, c));
    };

    record(0.0, y);
    double t = 0, h = 1e-4, h_used = 0;
    long steps = 0;
    long slow_steps = 0;
    Eigen::VectorXd ynext(y.size());
    while (t < opt.max_time && steps < opt.max_steps) {
        if (!dp45_step(rhs, y, t, h, h_used, ynext, opt.tol, n, max_dx)) continue;
        ++steps;
        double h_before = eval_h(model_, spec_, y.head(n));
        double h_after = eval_h(model_, spec_, ynext.head(n));
        double hdrop = opt.reverse ? h_after - h_before : h_before - h_after;
        y = ynext;
        if (m > 0 && frames) {
            Eigen::Map<Eigen::MatrixXd> U(y.data() + n, n, m);
            gram_schmidt_positive(U);
        }
        t += h_used;
        record(t, y);
        const auto& pos = traj.samples.back().pos;
        for (size_t c = 0; c < cps_.size(); ++c) {
            if (dist_to_cp(pos, c) < cap) {
                traj.dest_cp = static_cast<int>(c);
                return traj;
            }
        }
        if (hdrop < -1e-9) throw FlowStall("h increased along the flow");
        if (std::abs(hdrop) < 1e-15) {
            if (++slow_steps > 5000)
                throw FlowStall("h-decrease per step below floor without capture");
        } else {
            slow_steps = 0;
        }
    }
    throw FlowStall("flow did not reach any capture ball");
}

Trajectory MorseFlow::flow(const Eigen::VectorXd& start, const FlowOptions& opt) const {
    return integrate(start, nullptr, nullptr, opt);
}

Trajectory MorseFlow::flow_with_frame(const Eigen::VectorXd& start, const Eigen::MatrixXd& frame0,
                                      std::vector<Eigen::MatrixXd>& frames,
                                      const FlowOptions& opt) const {
    return integrate(start, &frame0, &frames, opt);
}

// ---------------------------------------------------------------------------
// connecting orbits
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd level_crossing_point(const Trajectory& traj, double c) {
    for (size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        double h0 = traj.samples[i].h, h1 = traj.samples[i + 1].h;
        if ((h0 - c) * (h1 - c) <= 0 && h0 != h1) {
            double w = (h0 - c) / (h0 - h1);
            Eigen::VectorXd p = traj.samples[i].pos;
            const Eigen::VectorXd& q = traj.samples[i + 1].pos;
            for (int a = 0; a < p.size(); ++a) {
                double d = torus_wrap(q[a] - p[a]);
                p[a] = torus_coord(p[a] + w * d);
            }
            return p;
        }
    }
    return traj.samples.back().pos;
}

double torus_dist_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double s = 0;
    for (int i = 0; i < a.size(); ++i) {
        double w = torus_wrap(a[i] - b[i]);
        s += w * w;
    }
    return std::sqrt(s);
}

} // namespace

int orbit_sign(const MorseFlow& mf, int x_id, int y_id, const Eigen::VectorXd& launch_dir) {
    const auto& cps = mf.critical_points();
    const CriticalPoint& x = cps[x_id];
    const CriticalPoint& y = cps[y_id];
    const int k = x.index;
    if (k != y.index + 1) throw ConfigError("orbit_sign: index x must be index y + 1");

    double r0 = 0.2 * mf.capture_radius();
    Eigen::VectorXd seed = x.position + r0 * launch_dir;
    std::vector<Eigen::MatrixXd> frames;
    FlowOptions fo;
    fo.tol = 1e-11;
    Trajectory traj = mf.flow_with_frame(seed, x.unstable_frame, frames, fo);
    if (traj.dest_cp != y_id)
        throw TransversalityWarning("orbit_sign: transported trajectory landed elsewhere");

    const Eigen::MatrixXd& U = frames.back();
    Eigen::VectorXd v = -grad_h(mf.model(), mf.spec(), traj.samples.back().pos);
    double vn = v.norm();
    if (vn < 1e-14) throw FrameDegeneracy("orbit_sign: vanishing flow at arrival");
    v /= vn;

    Eigen::MatrixXd B(mf.model().n, k);
    B.col(0) = v;
    for (int c = 0; c < k - 1; ++c) B.col(c + 1) = y.unstable_frame.col(c);
    Eigen::MatrixXd M = B.transpose() * U;
    double det = (k == 1) ? M(0, 0) : M.determinant();
    if (std::abs(det) < 1e-8)
        throw FrameDegeneracy("orbit_sign: orientation comparison is degenerate");
    return det > 0 ? 1 : -1;
}

std::vector<ConnectingOrbit> connecting_orbits(const MorseFlow& mf, int x_id, int y_id,
                                               const OrbitOptions& opt) {
    const auto& cps = mf.critical_points();
    if (x_id == y_id)
        throw ConfigError("connecting_orbits: x = y is excluded (W^- meets W^+ only at x)");
    const CriticalPoint& x = cps[x_id];
    const CriticalPoint& y = cps[y_id];
    const int k = x.index;
    if (k != y.index + 1)
        throw ConfigError("connecting_orbits: only consecutive indices are supported");

    const double r0 = mf.capture_radius(); // shooting sphere radius
    const double cval = 0.5 * (x.value + y.value);
    FlowOptions fo;
    fo.tol = opt.flow_tol;

    auto launch = [&](const Eigen::VectorXd& dir) {
        return mf.flow(x.position + r0 * dir, fo);
    };

    struct Candidate {
        Eigen::VectorXd dir;
        Trajectory traj;
    };
    std::vector<Candidate> cands;

    if (k == 1) {
        for (int side : {+1, -1}) {
            Eigen::VectorXd dir = double(side) * x.unstable_frame.col(0);
            Trajectory tr = launch(dir);
            if (tr.dest_cp == y_id) cands.push_back({dir, std::move(tr)});
        }
    } else if (k == 2) {
        const int M = std::max(16, opt.shoot_count);
        auto dir_of = [&](double theta) {
            return (std::cos(theta) * x.unstable_frame.col(0) +
                    std::sin(theta) * x.unstable_frame.col(1))
                .eval();
        };
        std::vector<Trajectory> shots(M);
        std::vector<double> thetas(M);
        for (int i = 0; i < M; ++i) {
            thetas[i] = (i + 0.5) * kTwoPi / M;
            shots[i] = launch(dir_of(thetas[i]));
        }
        auto try_push = [&](double theta, const Trajectory& tr) {
            if (tr.dest_cp == y_id) {
                cands.push_back({dir_of(theta), tr});
                return true;
            }
            return false;
        };
        std::vector<bool> handled(M, false);
        for (int i = 0; i < M; ++i)
            if (try_push(thetas[i], shots[i])) handled[i] = true;
        // basin boundaries between different destinations
        for (int i = 0; i < M; ++i) {
            int j = (i + 1) % M;
            if (handled[i] || handled[j]) continue;
            if (shots[i].dest_cp == shots[j].dest_cp) continue;
            double lo = thetas[i];
            double hi = thetas[i] + kTwoPi / M;
            int lo_dest = shots[i].dest_cp;
            bool found = false;
            while (hi - lo > opt.refine_tol) {
                double mid = 0.5 * (lo + hi);
                Trajectory tr = launch(dir_of(mid));
                if (tr.dest_cp == y_id) {
                    cands.push_back({dir_of(mid), std::move(tr)});
                    found = true;
                    break;
                }
                if (tr.dest_cp == lo_dest)
                    lo = mid;
                else
                    hi = mid;
            }
            if (!found) {
                Trajectory probe = launch(dir_of(0.5 * (lo + hi)));
                double dmin = probe.closest_approach[y_id];
                if (dmin < 3.0 * mf.capture_radius())
                    throw TransversalityWarning(
                        "separatrix refinement stalled above the capture radius");
            }
        }
        // same-destination near approaches (both sides of the connecting
        // orbit can fall into one basin)
        for (int i = 0; i < M; ++i) {
            if (handled[i]) continue;
            int ip = (i + 1) % M, im = (i + M - 1) % M;
            double d = shots[i].closest_approach[y_id];
            if (d >= shots[im].closest_approach[y_id] ||
                d > shots[ip].closest_approach[y_id])
                continue;
            if (d > std::min(0.45 * mf.min_distance(), 12.0 * mf.capture_radius())) continue;
            double lo = thetas[im], hi = thetas[i] + (thetas[i] - thetas[im]);
            // golden-section on the closest approach; capture at y ends it
            double a = lo, b = hi;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
            auto eval = [&](double th, Trajectory* out) {
                Trajectory tr = launch(dir_of(th));
                double val = tr.dest_cp == y_id ? 0.0 : tr.closest_approach[y_id];
                if (out) *out = std::move(tr);
                return val;
            };
            Trajectory t1, t2;
            double f1 = eval(c1, &t1), f2 = eval(c2, &t2);
            bool found = false;
            for (int it = 0; it < 200 && (b - a) > opt.refine_tol; ++it) {
                if (f1 == 0.0) {
                    cands.push_back({dir_of(c1), t1});
                    found = true;
                    break;
                }
                if (f2 == 0.0) {
                    cands.push_back({dir_of(c2), t2});
                    found = true;
                    break;
                }
                if (f1 < f2) {
                    b = c2;
                    c2 = c1;
                    f2 = f1;
                    t2 = t1;
                    c1 = b - gr * (b - a);
                    f1 = eval(c1, &t1);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    t1 = t2;
                    c2 = a + gr * (b - a);
                    f2 = eval(c2, &t2);
                }
            }
            if (!found) {
                double best = std::min(f1, f2);
                if (best > 0 && best < 3.0 * mf.capture_radius())
                    throw TransversalityWarning(
                        "near-approach refinement stalled above the capture radius");
            }
        }
    } else {
        throw ConfigError("connecting_orbits: index " + std::to_string(k) +
                          " shooting spheres are not supported (tori up to n = 2)");
    }

    // cluster by the level-set crossing
    std::vector<ConnectingOrbit> orbits;
    const double cluster_eps = std::max(2.0 * mf.capture_radius(), 1e-3);
    std::vector<Eigen::VectorXd> crossings;
    std::vector<Eigen::VectorXd> cand_dirs;
    for (auto& cd : cands) {
        Eigen::VectorXd cr = level_crossing_point(cd.traj, cval);
        bool dup = false;
        for (size_t j = 0; j < crossings.size(); ++j) {
            if (torus_dist_vec(cr, crossings[j]) < cluster_eps) {
                double dd = (cd.dir - cand_dirs[j]).norm();
                if (dd > 1e-4)
                    throw AmbiguousCluster(
                        "two distinct shooting directions share one level crossing; "
                        "increase shoot_count");
                dup = true;
                break;
            }
        }
        if (dup) continue;
        crossings.push_back(cr);
        cand_dirs.push_back(cd.dir);
        ConnectingOrbit orb;
        orb.trajectory = std::move(cd.traj);
        orb.launch_dir = cd.dir;
        orb.level_crossing = cr;
        orb.sign = orbit_sign(mf, x_id, y_id, cd.dir);
        orbits.push_back(std::move(orb));
    }
    return orbits;
}

int incidence(const MorseFlow& mf, int x_id, int y_id, const OrbitOptions& opt) {
    const auto& cps = mf.critical_points();
    if (x_id == y_id) return 0;
    if (cps[x_id].index != cps[y_id].index + 1) return 0;
    int s = 0;
    for (const auto& orb : connecting_orbits(mf, x_id, y_id, opt)) s += orb.sign;
    return s;
}

// ---------------------------------------------------------------------------
// complex
// ---------------------------------------------------------------------------

MorseComplex build_complex(const MorseFlow& mf, const OrbitOptions& opt) {
    const auto& cps = mf.critical_points();
    const int n = mf.model().n;
    MorseComplex cx;
    cx.cps = cps;
    cx.generators.assign(n + 1, {});
    for (size_t i = 0; i < cps.size(); ++i) cx.generators[cps[i].index].push_back(int(i));

    cx.partial.resize(n); // partial[q]: C^q -> C^{q+1}
    for (int q = 0; q < n; ++q) {
        const auto& rows = cx.generators[q + 1];
        const auto& cols = cx.generators[q];
        Eigen::MatrixXi P = Eigen::MatrixXi::Zero(rows.size(), cols.size());
        for (size_t r = 0; r < rows.size(); ++r)
            for (size_t c = 0; c < cols.size(); ++c)
                P(r, c) = incidence(mf, rows[r], cols[c], opt);
        cx.partial[q] = P;
    }

    for (int q = 0; q + 1 < n; ++q) {
        Eigen::MatrixXi prod = cx.partial[q + 1] * cx.partial[q];
        for (int r = 0; r < prod.rows(); ++r)
            for (int c = 0; c < prod.cols(); ++c)
                if (prod(r, c) != 0)
                    throw BoundarySquareNonzero(
                        "partial^2 != 0 between generators " +
                        std::to_string(cx.generators[q + 2][r]) + " and " +
                        std::to_string(cx.generators[q][c]));
    }
    return cx;
}

int integer_rank(Eigen::MatrixXi m) {
    // fraction-free Gaussian elimination
    const int R = static_cast<int>(m.rows()), C = static_cast<int>(m.cols());
    std::vector<std::vector<long long>> a(R, std::vector<long long>(C));
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) a[r][c] = m(r, c);
    int rank = 0;
    long long prev = 1;
    for (int col = 0; col < C && rank < R; ++col) {
        int piv = -1;
        for (int r = rank; r < R; ++r)
            if (a[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) continue;
        std::swap(a[rank], a[piv]);
        for (int r = rank + 1; r < R; ++r) {
            for (int c = col + 1; c < C; ++c)
                a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
            a[r][col] = 0;
        }
        prev = a[rank][col];
        ++rank;
    }
    return rank;
}

std::vector<int> cohomology_ranks(const MorseComplex& cx) {
    const int n = static_cast<int>(cx.generators.size()) - 1;
    std::vector<int> ranks(n, 0);
    for (int q = 0; q < n; ++q) ranks[q] = integer_rank(cx.partial[q]);
    std::vector<int> betti(n + 1, 0);
    for (int q = 0; q <= n; ++q) {
        int mq = cx.degree_count(q);
        int r_out = (q < n) ? ranks[q] : 0;
        int r_in = (q > 0) ? ranks[q - 1] : 0;
        betti[q] = mq - r_out - r_in;
    }
    return betti;
}

// ---------------------------------------------------------------------------
// unstable cells and integration
// ---------------------------------------------------------------------------

UnstableCell build_unstable_cell(const MorseFlow& mf, int cp_id, const CellOptions& opt) {
    const auto& cps = mf.critical_points();
    const CriticalPoint& x = cps[cp_id];
    UnstableCell cell;
    cell.cp_id = cp_id;
    cell.dim = x.index;
    cell.frame = x.unstable_frame;
    cell.capture_radius = 0.2 * mf.capture_radius();
    cell.launch_radius = std::min(1e-3, 0.2 * mf.capture_radius());
    const int n = mf.model().n;
    if (cell.dim == n) {
        int tops = 0;
        for (const auto& cp : cps)
            if (cp.index == n) ++tops;
        cell.whole_manifold = (tops == 1);
    }
    if (cell.dim == 1) {
        CellRay rp, rm;
        rp.side = +1;
        rm.side = -1;
        cell.rays = {rp, rm};
    } else if (cell.dim == 2) {
        const int M = std::max(16, opt.rays);
        for (int j = 0; j < M; ++j) {
            CellRay r;
            r.theta = (j + 0.5) * kTwoPi / M;
            cell.rays.push_back(r);
        }
    } else if (cell.dim > 2) {
        throw ConfigError("build_unstable_cell: cells of dimension > 2 are not supported");
    }
    return cell;
}

FormSampler make_sampler(const TorusModel& model, SpectralGrid& grid, const GridForm& w,
                         double prune_rel) {
    auto interps = std::make_shared<std::vector<TrigInterpolant>>();
    for (const auto& comp : w.comps) interps->emplace_back(grid, comp, prune_rel);
    FormSampler s;
    s.n = model.n;
    s.q = w.q;
    s.eval = [interps](const Eigen::VectorXd& x, double* out) {
        for (size_t f = 0; f < interps->size(); ++f) out[f] = (*interps)[f](x);
    };
    return s;
}

FormSampler weighted_sampler(const TorusModel& model, const MorseFunctionSpec& spec,
                             const FormSampler& base, double c, double h_ref) {
    FormSampler s = base;
    auto inner = base.eval;
    const int fibers = static_cast<int>(binomial(base.n, base.q));
    s.eval = [model, spec, inner, c, h_ref, fibers](const Eigen::VectorXd& x, double* out) {
        inner(x, out);
        double w = std::exp(c * (eval_h(model, spec, x) - h_ref));
        for (int f = 0; f < fibers; ++f) out[f] *= w;
    };
    return s;
}

namespace {

// value of a q-form (fiber components in lex order) on q tangent vectors,
// q <= 2
double apply_form(const FormSampler& form, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                  const Eigen::VectorXd* v) {
    const auto& fb = FiberBasis::get(form.n, form.q);
    double comps[8];
    form.eval(x, comps);
    if (form.q == 1) {
        double s = 0;
        for (int f = 0; f < fb.count(); ++f) s += comps[f] * u[fb.tuples[f][0]];
        return s;
    }
    double s = 0;
    for (int f = 0; f < fb.count(); ++f) {
        int i = fb.tuples[f][0], j = fb.tuples[f][1];
        s += comps[f] * (u[i] * (*v)[j] - u[j] * (*v)[i]);
    }
    return s;
}

// straight-segment integral of the form from a to b (k = 1 tail/core pieces)
double segment_integral(const FormSampler& form, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& b) {
    Eigen::VectorXd d(a.size());
    for (int i = 0; i < a.size(); ++i) d[i] = torus_wrap(b[i] - a[i]);
    const GaussRule& gr = gauss_legendre(16);
    double total = 0;
    for (size_t i = 0; i < gr.nodes.size(); ++i) {
        double s = 0.5 * (gr.nodes[i] + 1.0);
        Eigen::VectorXd x = a + s * d;
        total += gr.weights[i] * 0.5 * apply_form(form, x, d, nullptr);
    }
    return total;
}

struct RayResult {
    double quad = 0;        // flow integral down to capture_radius/2
    double quad_outer = 0;  // value when first crossing capture_radius
    Eigen::VectorXd end_pos;
    Eigen::VectorXd end_jac;    // theta-Jacobian at the end (k = 2)
    Eigen::VectorXd outer_pos;
    int dest = -1;
};

} // namespace

double integrate_over_unstable(const MorseFlow& mf, const UnstableCell& cell,
                               const FormSampler& form, const CellOptions& opt) {
    const auto& cps = mf.critical_points();
    const CriticalPoint& x = cps[cell.cp_id];
    const int n = mf.model().n;
    const int k = cell.dim;
    if (form.q != k)
        throw ConfigError("integrate_over_unstable: form degree must equal cell dimension");

    if (k == 0) {
        double val = 0;
        form.eval(x.position, &val);
        return val;
    }
    if (k > 2) throw ConfigError("integrate_over_unstable: dimension > 2 unsupported");

    const TorusModel& model = mf.model();
    const MorseFunctionSpec& spec = mf.spec();
    const double r_launch = cell.launch_radius;
    const double r_cap = cell.capture_radius;
    const double max_dx = std::min(0.5 * mf.capture_radius(),
                                   (opt.arc_step > 0 ? opt.arc_step : opt.feature_length / 3.0));

    // flow one ray with the quadrature carried as an ODE component
    auto run_ray = [&](const Eigen::VectorXd& dir, const Eigen::VectorXd* dtheta0) {
        const int m = dtheta0 ? 1 : 0;
        const int dim = n + n * m + 1;
        auto rhs = [&](double, const Eigen::VectorXd& y) {
            Eigen::VectorXd dy(dim);
            Eigen::VectorXd pos = y.head(n);
            Eigen::VectorXd v = -grad_h(model, spec, pos);
            dy.head(n) = v;
            if (m > 0) {
                Eigen::MatrixXd H = hessian_h(model, spec, pos);
                Eigen::VectorXd jac = y.segment(n, n);
                dy.segment(n, n) = -(H * jac);
                dy[dim - 1] = apply_form(form, pos, v, &jac);
            } else {
                dy[dim - 1] = apply_form(form, pos, v, nullptr);
            }
            return dy;
        };
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim);
        y.head(n) = x.position + r_launch * dir;
        if (m > 0) y.segment(n, n) = *dtheta0;

        RayResult rr;
        bool outer_done = false;
        double t = 0, h = 1e-5, h_used = 0;
        Eigen::VectorXd ynext(dim);
        long steps = 0;
        while (steps < 400000) {
            if (!dp45_step(rhs, y, t, h, h_used, ynext, opt.flow_tol, n, max_dx)) continue;
            ++steps;
            t += h_used;
            y = ynext;
            Eigen::VectorXd pos = y.head(n);
            for (size_t c = 0; c < cps.size(); ++c) {
                if (static_cast<int>(c) == cell.cp_id) continue;
                double d = torus_dist_vec(pos, cps[c].position);
                if (!outer_done && d < 2.0 * r_cap) {
                    rr.quad_outer = y[dim - 1];
                    rr.outer_pos = pos;
                    outer_done = true;
                }
                if (d < r_cap) {
                    rr.quad = y[dim - 1];
                    rr.end_pos = pos;
                    if (m > 0) rr.end_jac = y.segment(n, n);
                    rr.dest = static_cast<int>(c);
                    if (!outer_done) {
                        rr.quad_outer = rr.quad;
                        rr.outer_pos = pos;
                    }
                    return rr;
                }
            }
            if (t > 2000.0) throw FlowStall("cell ray did not reach a sink");
        }
        throw FlowStall("cell ray exceeded the step budget");
    };

    double total = 0;
    double consistency = 0;

    if (k == 1) {
        Eigen::VectorXd e1 = cell.frame.col(0);
        // straight core through the critical point, oriented by e1
        total += segment_integral(form, (x.position - r_launch * e1).eval(),
                                  (x.position + r_launch * e1).eval());
        for (int side : {+1, -1}) {
            RayResult rr = run_ray((double(side) * e1).eval(), nullptr);
            const Eigen::VectorXd& sink = cps[rr.dest].position;
            double tail_inner = segment_integral(form, rr.end_pos, sink);
            double tail_outer = segment_integral(form, rr.outer_pos, sink);
            double inner_est = rr.quad + tail_inner;
            double outer_est = rr.quad_outer + tail_outer;
            consistency = std::max(consistency, std::abs(inner_est - outer_est));
            total += side * inner_est;
        }
    } else {
        // polar core disc in the unstable eigenplane
        Eigen::VectorXd e1 = cell.frame.col(0), e2 = cell.frame.col(1);
        const GaussRule& gr = gauss_legendre(8);
        const int MA = 16;
        double core = 0;
        for (size_t ir = 0; ir < gr.nodes.size(); ++ir) {
            double r = 0.5 * r_launch * (gr.nodes[ir] + 1.0);
            double wr = 0.5 * r_launch * gr.weights[ir];
            for (int ia = 0; ia < MA; ++ia) {
                double th = (ia + 0.5) * kTwoPi / MA;
                Eigen::VectorXd rad = std::cos(th) * e1 + std::sin(th) * e2;
                Eigen::VectorXd ang = -std::sin(th) * e1 + std::cos(th) * e2;
                Eigen::VectorXd p = x.position + r * rad;
                core += wr * (kTwoPi / MA) * r * apply_form(form, p, rad, &ang);
            }
        }
        total += core;
        const double dtheta = kTwoPi / cell.rays.size();
        for (const auto& ray : cell.rays) {
            Eigen::VectorXd dir = std::cos(ray.theta) * e1 + std::sin(ray.theta) * e2;
            Eigen::VectorXd jac0 =
                r_launch * (-std::sin(ray.theta) * e1 + std::cos(ray.theta) * e2);
            RayResult rr = run_ray(dir, &jac0);
            // tail: jacobian collapses linearly into the sink
            const Eigen::VectorXd& sink = cps[rr.dest].position;
            Eigen::VectorXd d(n);
            for (int i = 0; i < n; ++i) d[i] = torus_wrap(sink[i] - rr.end_pos[i]);
            const GaussRule& g2 = gauss_legendre(8);
            double tail = 0;
            for (size_t i = 0; i < g2.nodes.size(); ++i) {
                double s = 0.5 * (g2.nodes[i] + 1.0);
                Eigen::VectorXd p = rr.end_pos + s * d;
                Eigen::VectorXd jac = (1.0 - s) * rr.end_jac;
                tail += g2.weights[i] * 0.5 * apply_form(form, p, d, &jac);
            }
            total += dtheta * (rr.quad + tail);
            consistency = std::max(consistency, dtheta * std::abs(rr.quad - rr.quad_outer) *
                                                    0.25); // coarse gauge
        }
    }

    if (consistency > opt.quad_tol * std::max(1.0, std::abs(total)))
        throw MeshUnderResolved("unstable-cell quadrature residual " +
                                format_double(consistency) + " above tolerance");
    return total;
}

double integrate_top_cell_grid(const FormOps& ops, const GridForm& w, const UnstableCell& cell,
                               const std::vector<double>* weight) {
    if (!cell.whole_manifold)
        throw ConfigError("integrate_top_cell_grid: cell closure is not the whole manifold");
    if (w.q != ops.model.n) throw ConfigError("integrate_top_cell_grid: need a top form");
    double sgn = cell.frame.determinant() > 0 ? 1.0 : -1.0;
    const auto& comp = w.comps[0];
    double s = 0;
    if (weight) {
        for (size_t i = 0; i < comp.size(); ++i) s += comp[i] * (*weight)[i];
    } else {
        for (size_t i = 0; i < comp.size(); ++i) s += comp[i];
    }
    return sgn * s * ops.model.cell_volume();
}

double int_morphism_residual(const MorseFlow& mf, const MorseComplex& cx, FormOps& ops,
                             const GridForm& w, const CellOptions& opt) {
    const int q = w.q;
    const int n = mf.model().n;
    if (q < 0 || q >= n) throw ConfigError("int_morphism_residual: need 0 <= q < n");

    GridForm dw = ops.d(w);
    FormSampler sw = make_sampler(mf.model(), ops.grid, w);
    FormSampler sdw = make_sampler(mf.model(), ops.grid, dw);

    const auto& lows = cx.generators[q];
    const auto& highs = cx.generators[q + 1];

    std::vector<double> int_low(lows.size());
    for (size_t j = 0; j < lows.size(); ++j) {
        UnstableCell cell = build_unstable_cell(mf, lows[j], opt);
        int_low[j] = integrate_over_unstable(mf, cell, sw, opt);
    }
    double resid = 0;
    for (size_t r = 0; r < highs.size(); ++r) {
        UnstableCell cell = build_unstable_cell(mf, highs[r]);
        double lhs;
        if (cell.whole_manifold)
            lhs = integrate_top_cell_grid(ops, dw, cell);
        else
            lhs = integrate_over_unstable(mf, cell, sdw, opt);
        double rhs = 0;
        for (size_t jc = 0; jc < lows.size(); ++jc)
            rhs += double(cx.partial[q](r, jc)) * int_low[jc];
        resid = std::max(resid, std::abs(lhs - rhs));
    }
    return resid;
}

} // namespace whs
