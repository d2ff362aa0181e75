#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "support.hpp"
#include "whs/fail.hpp"

using namespace whs;
using whstest::pt;

namespace {
constexpr double kPi2 = 4.0 * M_PI * M_PI;

GridForm sample_form(const TorusModel& model, int q,
                     const std::function<double(const Eigen::VectorXd&, int fiber)>& f) {
    GridForm w(model, q);
    for (int fb = 0; fb < w.fibers(); ++fb)
        for (long i = 0; i < w.points(); ++i) w.comps[fb][i] = f(grid_point(model, i), fb);
    return w;
}
} // namespace

TEST_CASE("exterior derivative is exact on band-limited data") {
    TorusModel t2(2, 32);
    FormOps ops(t2);
    GridForm f = sample_form(t2, 0, [](const Eigen::VectorXd& x, int) {
        return std::sin(kTwoPi * x[0]);
    });
    GridForm df = ops.d(f);
    for (long i = 0; i < f.points(); ++i) {
        Eigen::VectorXd x = grid_point(t2, i);
        CHECK(df.comps[0][i] == doctest::Approx(kTwoPi * std::cos(kTwoPi * x[0])).epsilon(1e-11));
        CHECK(df.comps[1][i] == doctest::Approx(0.0).epsilon(1e-11));
    }
    // constant functions
    GridForm c = sample_form(t2, 0, [](const Eigen::VectorXd&, int) { return 3.25; });
    GridForm dc = ops.d(c);
    CHECK(ops.norm(dc) < 1e-12);
}

TEST_CASE("d^2 = 0 and degree overflow returns the zero object") {
    TorusModel t2(2, 32);
    FormOps ops(t2);
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        GridForm w = random_bandlimited_form(t2, 0, 5, rng);
        CHECK(ops.norm(ops.d(ops.d(w))) < 1e-10 * std::max(1.0, ops.norm(w)));
    }
    GridForm top = random_bandlimited_form(t2, 2, 5, rng);
    GridForm dtop = ops.d(top);
    CHECK(dtop.fibers() == 0);
}

TEST_CASE("Hodge star permutation signs") {
    TorusModel t2(2, 16);
    FormOps ops(t2);
    // star(dx) = dy, star(dy) = -dx
    GridForm dx = sample_form(t2, 1, [](const Eigen::VectorXd&, int f) { return f == 0 ? 1.0 : 0.0; });
    GridForm sdx = ops.hodge_star(dx);
    CHECK(sdx.comps[0][0] == doctest::Approx(0.0));
    CHECK(sdx.comps[1][0] == doctest::Approx(1.0));
    GridForm dy = sample_form(t2, 1, [](const Eigen::VectorXd&, int f) { return f == 1 ? 1.0 : 0.0; });
    GridForm sdy = ops.hodge_star(dy);
    CHECK(sdy.comps[0][0] == doctest::Approx(-1.0));
    CHECK(sdy.comps[1][0] == doctest::Approx(0.0));
    // star(1) = dx ^ dy and back
    GridForm one = sample_form(t2, 0, [](const Eigen::VectorXd&, int) { return 1.0; });
    CHECK(ops.hodge_star(one).comps[0][0] == doctest::Approx(1.0));
    GridForm vol = sample_form(t2, 2, [](const Eigen::VectorXd&, int) { return 1.0; });
    CHECK(ops.hodge_star(vol).comps[0][0] == doctest::Approx(1.0));
}

TEST_CASE("star-star sign law is exact for every degree, n = 1..2") {
    for (int n : {1, 2}) {
        TorusModel model(n, 16);
        FormOps ops(model);
        Rng rng(n);
        for (int q = 0; q <= n; ++q) {
            GridForm w = random_bandlimited_form(model, q, 3, rng);
            GridForm ss = ops.hodge_star(ops.hodge_star(w));
            double sign = ((q * (n - q)) % 2 == 0) ? 1.0 : -1.0;
            GridForm diff = ss - sign * w;
            CHECK(ops.norm(diff) == 0.0); // pure permutation, bitwise exact
        }
    }
}

TEST_CASE("codifferential on T^1 matches -g'") {
    TorusModel t1(1, 64);
    FormOps ops(t1);
    GridForm gdx = sample_form(t1, 1, [](const Eigen::VectorXd& x, int) {
        return kTwoPi * std::cos(kTwoPi * x[0]);
    });
    GridForm del = ops.codifferential(gdx);
    for (long i = 0; i < del.points(); ++i) {
        Eigen::VectorXd x = grid_point(t1, i);
        CHECK(del.comps[0][i] ==
              doctest::Approx(kPi2 * std::sin(kTwoPi * x[0])).epsilon(1e-11));
    }
}

TEST_CASE("delta^2 = 0 and d/delta adjointness") {
    TorusModel t2(2, 32);
    FormOps ops(t2);
    Rng rng(21);
    for (int rep = 0; rep < 10; ++rep) {
        GridForm w = random_bandlimited_form(t2, 2, 5, rng);
        CHECK(ops.norm(ops.codifferential(ops.codifferential(w))) < 1e-10);
        GridForm a = random_bandlimited_form(t2, 0, 5, rng);
        GridForm b = random_bandlimited_form(t2, 1, 5, rng);
        double lhs = ops.inner_product(ops.d(a), b);
        double rhs = ops.inner_product(a, ops.codifferential(b));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("contraction algebra") {
    TorusModel t2(2, 16);
    FormOps ops(t2);
    VectorFieldGrid ex{2, 16, {std::vector<double>(256, 1.0), std::vector<double>(256, 0.0)}};
    VectorFieldGrid ey{2, 16, {std::vector<double>(256, 0.0), std::vector<double>(256, 1.0)}};
    GridForm vol = sample_form(t2, 2, [](const Eigen::VectorXd&, int) { return 1.0; });
    GridForm ix = ops.contraction(ex, vol);
    CHECK(ix.comps[0][0] == doctest::Approx(0.0));
    CHECK(ix.comps[1][0] == doctest::Approx(1.0)); // dy
    GridForm iy = ops.contraction(ey, vol);
    CHECK(iy.comps[0][0] == doctest::Approx(-1.0)); // -dx
    CHECK(iy.comps[1][0] == doctest::Approx(0.0));

    // iota_X iota_X = 0 and the adjoint pair against the wedge
    Rng rng(5);
    WittenOps wops(t2, whstest::t2_product());
    const VectorFieldGrid& X = wops.grad_field();
    GridForm w2 = random_bandlimited_form(t2, 2, 4, rng);
    CHECK(ops.norm(ops.contraction(X, ops.contraction(X, w2))) < 1e-12);
    GridForm w1 = random_bandlimited_form(t2, 1, 4, rng);
    GridForm xflat;
    xflat.n = 2;
    xflat.q = 1;
    xflat.res = 16;
    xflat.comps = X.comps;
    double lhs = ops.inner_product(ops.contraction(X, w2), w1);
    double rhs = ops.inner_product(w2, ops.exterior_mult(xflat, w1));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("Lie derivative via the Cartan formula") {
    TorusModel t2(2, 32);
    FormOps ops(t2);
    long tot = t2.total_points();
    VectorFieldGrid ex{2, 32, {std::vector<double>(tot, 1.0), std::vector<double>(tot, 0.0)}};
    GridForm w = sample_form(t2, 1, [](const Eigen::VectorXd& x, int f) {
        return f == 1 ? std::sin(kTwoPi * x[0]) : 0.0;
    });
    GridForm lw = ops.lie_derivative(ex, w);
    for (long i = 0; i < tot; ++i) {
        Eigen::VectorXd x = grid_point(t2, i);
        CHECK(lw.comps[1][i] ==
              doctest::Approx(kTwoPi * std::cos(kTwoPi * x[0])).epsilon(1e-10));
        CHECK(lw.comps[0][i] == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("symmetrized Lie operator acts pointwise") {
    // L + L-sharp must commute with multiplication by bump functions
    TorusModel t1(1, 128);
    WittenOps wops(t1, whstest::t1_cosine());
    FormOps& ops = wops.ops();
    const VectorFieldGrid& X = wops.grad_field();
    Rng rng(3);
    GridForm w = random_bandlimited_form(t1, 0, 6, rng);
    std::vector<double> bump(t1.total_points());
    for (long i = 0; i < t1.total_points(); ++i) {
        double x = double(i) / t1.grid_res;
        bump[i] = std::exp(std::cos(kTwoPi * x)); // smooth positive multiplier
    }
    auto mult = [&](const GridForm& g) {
        GridForm out = g;
        for (auto& comp : out.comps)
            for (long i = 0; i < (long)comp.size(); ++i) comp[i] *= bump[i];
        return out;
    };
    GridForm a = ops.lie_derivative(X, mult(w)) + ops.lie_sharp(X, mult(w));
    GridForm b = mult(ops.lie_derivative(X, w) + ops.lie_sharp(X, w));
    CHECK(ops.norm(a - b) < 1e-7 * std::max(1.0, ops.norm(b)));

    // and matches the pointwise Hessian form
    GridForm c = wops.zeroth_order_term(w);
    GridForm d = ops.lie_derivative(X, w) + ops.lie_sharp(X, w);
    CHECK(ops.norm(c - d) < 1e-9 * std::max(1.0, ops.norm(d)));
}

TEST_CASE("inner products on the unit torus") {
    TorusModel t2(2, 16);
    FormOps ops(t2);
    GridForm dx = sample_form(t2, 1, [](const Eigen::VectorXd&, int f) { return f == 0 ? 1.0 : 0.0; });
    GridForm dy = sample_form(t2, 1, [](const Eigen::VectorXd&, int f) { return f == 1 ? 1.0 : 0.0; });
    CHECK(ops.inner_product(dx, dx) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ops.inner_product(dx, dy) == doctest::Approx(0.0));
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        GridForm a = random_bandlimited_form(t2, 1, 4, rng);
        GridForm b = random_bandlimited_form(t2, 1, 4, rng);
        double ip = ops.inner_product(a, b);
        CHECK(ip * ip <= ops.inner_product(a, a) * ops.inner_product(b, b) * (1 + 1e-12));
    }
}

TEST_CASE("Witten deformation basics") {
    TorusModel t1(1, 128);
    WittenOps wops(t1, whstest::t1_cosine());
    FormOps& ops = wops.ops();
    Rng rng(9);
    GridForm w = random_bandlimited_form(t1, 0, 8, rng);

    // t = 0 reduces to d, delta
    CHECK(ops.norm(wops.witten_d(w, 0.0) - ops.d(w)) == 0.0);
    GridForm w1 = random_bandlimited_form(t1, 1, 8, rng);
    CHECK(ops.norm(wops.witten_delta(w1, 0.0) - ops.codifferential(w1)) == 0.0);

    // d(t)^2 = 0
    double t = 3.5;
    CHECK(ops.norm(wops.witten_d(wops.witten_d(w, t), t)) < 1e-9);

    // two delta routes agree
    GridForm da = wops.witten_delta(w1, t);
    GridForm db = wops.witten_delta_star(w1, t);
    CHECK(ops.norm(da - db) < 1e-10 * std::max(1.0, ops.norm(da)));
}

TEST_CASE("Witten laplacian symbol on the T^1 cosine") {
    // Delta_0(t) f = -f'' + t^2 (2 pi)^2 sin^2(2 pi x) f + t (2 pi)^2 cos(2 pi x) f
    TorusModel t1(1, 128);
    WittenOps wops(t1, whstest::t1_cosine());
    double t = 2.25;
    GridForm f = sample_form(t1, 0, [](const Eigen::VectorXd& x, int) {
        return std::sin(kTwoPi * 2 * x[0]) + 0.3 * std::cos(kTwoPi * x[0]);
    });
    GridForm lap = wops.laplacian(f, t);
    for (long i = 0; i < f.points(); ++i) {
        double x = double(i) / t1.grid_res;
        double fx = std::sin(kTwoPi * 2 * x) + 0.3 * std::cos(kTwoPi * x);
        double fpp = -kPi2 * 4 * std::sin(kTwoPi * 2 * x) - 0.3 * kPi2 * std::cos(kTwoPi * x);
        double want = -fpp + t * t * kPi2 * std::sin(kTwoPi * x) * std::sin(kTwoPi * x) * fx +
                      t * kPi2 * std::cos(kTwoPi * x) * fx;
        CHECK(lap.comps[0][i] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("flat laplacian eigenfunction") {
    TorusModel t1(1, 64);
    WittenOps wops(t1, whstest::t1_cosine());
    GridForm f = sample_form(t1, 0, [](const Eigen::VectorXd& x, int) {
        return std::sin(kTwoPi * x[0]);
    });
    GridForm lap = wops.laplacian(f, 0.0);
    for (long i = 0; i < f.points(); ++i)
        CHECK(lap.comps[0][i] == doctest::Approx(kPi2 * f.comps[0][i]).epsilon(1e-10));
}

TEST_CASE("two-path laplacian split and its structure probes") {
    TorusModel t2(2, 32);
    WittenOps wops(t2, whstest::t2_product());
    FormOps& ops = wops.ops();
    Rng rng(31);
    for (int q = 0; q <= 2; ++q) {
        GridForm w = random_bandlimited_form(t2, q, 5, rng);
        for (double t : {1.0, 2.0}) {
            GridForm a = wops.laplacian(w, t);
            GridForm b = wops.laplacian_split(w, t);
            CHECK(ops.norm(a - b) < 1e-8 * std::max(1.0, ops.norm(a)));
        }
        // linearity in t of Delta(t) - Delta - t^2 |grad|^2: second difference
        GridForm d0 = wops.laplacian(w, 0.0);
        auto mid = [&](double t) {
            GridForm r = wops.laplacian(w, t);
            r -= d0;
            GridForm pot(t2, q);
            for (int f = 0; f < w.fibers(); ++f)
                for (long i = 0; i < w.points(); ++i)
                    pot.comps[f][i] = wops.grad_sq_field()[i] * w.comps[f][i];
            r -= (t * t) * pot;
            return r;
        };
        GridForm m1 = mid(1.0), m2 = mid(2.0);
        GridForm second = m2 - 2.0 * m1; // vanishes when mid(t) is linear in t
        CHECK(ops.norm(second) < 1e-8 * std::max(1.0, ops.norm(m1)));
    }
}

TEST_CASE("positivity of the deformed quadratic form") {
    TorusModel t1(1, 64);
    WittenOps wops(t1, whstest::t1_double_well());
    FormOps& ops = wops.ops();
    Rng rng(41);
    for (int rep = 0; rep < 10; ++rep) {
        GridForm w = random_bandlimited_form(t1, rep % 2, 6, rng);
        GridForm lw = wops.laplacian(w, 4.0);
        CHECK(ops.inner_product(lw, w) > -1e-9);
    }
}

TEST_CASE("resolution guard trips for narrow Gaussians") {
    TorusModel t1(1, 32);
    WittenOps wops(t1, whstest::t1_cosine());
    CHECK_THROWS_AS(wops.check_resolution(1000.0), ResolutionTooCoarse);
    wops.check_resolution(1.0); // fine at small t
    CHECK(WittenOps::required_resolution(t1, whstest::t1_cosine(), 32.0) >= 128);
}

TEST_CASE("form serialization round trip") {
    TorusModel t2(2, 16);
    Rng rng(77);
    GridForm w = random_bandlimited_form(t2, 1, 4, rng);
    std::string path = "/tmp/whs_test_form.gfrm";
    save_form(path, w);
    GridForm back = load_form(path);
    CHECK(back.n == w.n);
    CHECK(back.q == w.q);
    CHECK(back.res == w.res);
    REQUIRE(back.comps.size() == w.comps.size());
    for (size_t f = 0; f < w.comps.size(); ++f)
        CHECK(back.comps[f] == w.comps[f]); // bit exact
    std::remove(path.c_str());
}

TEST_CASE("dealiased products agree on resolved data and differ when aliased") {
    TorusModel t1(1, 32);
    SpectralGrid g(1, 32);
    // resolved: band 4 * band 4 -> band 8 < Nyquist
    std::vector<double> a(32), b(32);
    for (int i = 0; i < 32; ++i) {
        double x = i / 32.0;
        a[i] = std::cos(kTwoPi * 4 * x);
        b[i] = std::sin(kTwoPi * 3 * x);
    }
    auto plain = g.multiply(a, b, false);
    auto deal = g.multiply(a, b, true);
    for (int i = 0; i < 32; ++i) CHECK(plain[i] == doctest::Approx(deal[i]).epsilon(1e-12));
    // aliased: band 12 * band 12 -> band 24 wraps on a 32 grid
    for (int i = 0; i < 32; ++i) {
        double x = i / 32.0;
        a[i] = std::cos(kTwoPi * 12 * x);
        b[i] = std::cos(kTwoPi * 12 * x);
    }
    plain = g.multiply(a, b, false);
    deal = g.multiply(a, b, true);
    double diff = 0;
    for (int i = 0; i < 32; ++i) diff = std::max(diff, std::abs(plain[i] - deal[i]));
    CHECK(diff > 0.1);
}
