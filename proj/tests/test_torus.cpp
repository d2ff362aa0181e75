#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "whs/fail.hpp"

using namespace whs;
using whstest::pt;

namespace {
constexpr double kPi2 = 4.0 * M_PI * M_PI; // (2 pi)^2
}

TEST_CASE("closed-form evaluation of h, grad, Hessian") {
    TorusModel t1(1, 64);
    auto h = whstest::t1_cosine();

    CHECK(eval_h(t1, h, pt({0.0})) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(grad_h(t1, h, pt({0.0}))[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(hessian_h(t1, h, pt({0.0}))(0, 0) == doctest::Approx(-kPi2).epsilon(1e-13));

    TorusModel t2(2, 64);
    auto h2 = whstest::t2_product();
    Eigen::VectorXd g = grad_h(t2, h2, pt({0.25, 0.25}));
    CHECK(g[0] == doctest::Approx(-2.0 * M_PI).epsilon(1e-13));
    CHECK(g[1] == doctest::Approx(-2.0 * M_PI).epsilon(1e-13));
}

TEST_CASE("Hessian symmetry holds exactly") {
    TorusModel t2(2, 64);
    MorseFunctionSpec spec;
    spec.terms = {{{1, 2}, 0.7, 0.3}, {{2, -1}, 0.4, 1.1}, {{1, 0}, 1.0, 0.0}};
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x = pt({rng.uniform(), rng.uniform()});
        Eigen::MatrixXd H = hessian_h(t2, spec, x);
        CHECK(H(0, 1) == H(1, 0));
    }
}

TEST_CASE("critical points of the T^1 cosine") {
    TorusModel t1(1, 64);
    auto cps = find_critical_points(t1, whstest::t1_cosine());
    REQUIRE(cps.size() == 2);
    CHECK(cps[0].index == 0);
    CHECK(cps[0].position[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(cps[1].index == 1);
    CHECK(cps[1].position[0] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(cps[0].grad_norm < 1e-10);
}

TEST_CASE("critical points of the T^2 product cosine") {
    TorusModel t2(2, 64);
    auto cps = find_critical_points(t2, whstest::t2_product());
    REQUIRE(cps.size() == 4);
    CHECK(cps[0].index == 0);
    CHECK(cps[0].position[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(cps[0].position[1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(cps[1].index == 1);
    CHECK(cps[2].index == 1);
    CHECK(cps[3].index == 2);
    CHECK(cps[3].position.norm() < 1e-10);
    // saddle unstable directions are coordinate axes
    for (int i : {1, 2}) {
        Eigen::VectorXd u = cps[i].unstable_frame.col(0);
        CHECK(std::abs(std::abs(u[0]) + std::abs(u[1]) - 1.0) < 1e-10);
    }
}

TEST_CASE("double well roots match the factorization") {
    TorusModel t1(1, 64);
    auto cps = find_critical_points(t1, whstest::t1_double_well());
    REQUIRE(cps.size() == 4);
    // minima where cos(2 pi x) = -5/6
    double xstar = std::acos(-5.0 / 6.0) / kTwoPi;
    CHECK(cps[0].index == 0);
    CHECK(cps[1].index == 0);
    CHECK(cps[0].position[0] == doctest::Approx(xstar).epsilon(1e-9));
    CHECK(cps[1].position[0] == doctest::Approx(1.0 - xstar).epsilon(1e-9));
    CHECK(cps[2].index == 1);
    CHECK(cps[3].index == 1);
    // maxima at 1/2 (low) and 0 (high), ordered by value
    CHECK(cps[2].position[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cps[3].position[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("census invariants: Euler characteristic and Morse inequalities") {
    TorusModel t2(2, 64);
    for (auto spec : {whstest::t2_product()}) {
        auto cps = find_critical_points(t2, spec);
        CHECK(euler_characteristic(cps) == 0);
        std::vector<int> m(3, 0);
        for (const auto& cp : cps) ++m[cp.index];
        CHECK(m[0] >= 1);
        CHECK(m[1] >= 2);
        CHECK(m[2] >= 1);
    }
    TorusModel t1(1, 64);
    for (auto spec : {whstest::t1_cosine(), whstest::t1_double_well()}) {
        auto cps = find_critical_points(t1, spec);
        CHECK(euler_characteristic(cps) == 0);
    }
}

TEST_CASE("finder is resolution stable") {
    TorusModel t1(1, 64);
    auto spec = whstest::t1_double_well();
    CriticalPointOptions a, b;
    a.seeds_per_axis = 16;
    b.seeds_per_axis = 32;
    auto ca = find_critical_points(t1, spec, a);
    auto cb = find_critical_points(t1, spec, b);
    REQUIRE(ca.size() == cb.size());
    for (size_t i = 0; i < ca.size(); ++i)
        CHECK(std::abs(torus_wrap(ca[i].position[0] - cb[i].position[0])) < 1e-10);
}

TEST_CASE("degenerate spec is rejected") {
    TorusModel t2(2, 64);
    MorseFunctionSpec flat; // h = cos(2 pi x): constant along y on T^2
    flat.terms = {{{1, 0}, 1.0, 0.0}};
    CHECK_THROWS_AS(find_critical_points(t2, flat), DegenerateCritical);
}

TEST_CASE("morse spec JSON round trip") {
    auto spec = whstest::t1_double_well();
    auto back = MorseFunctionSpec::from_json(spec.to_json());
    REQUIRE(back.terms.size() == spec.terms.size());
    for (size_t i = 0; i < spec.terms.size(); ++i) {
        CHECK(back.terms[i].freq == spec.terms[i].freq);
        CHECK(back.terms[i].amp == spec.terms[i].amp);
        CHECK(back.terms[i].phase == spec.terms[i].phase);
    }
    CHECK_THROWS_AS(MorseFunctionSpec::from_json("{\"oops\": 1}"), ConfigError);
}

TEST_CASE("unstable frames are orthonormal") {
    TorusModel t2(2, 64);
    auto cps = find_critical_points(t2, whstest::t2_product());
    for (const auto& cp : cps) {
        if (cp.index == 0) continue;
        Eigen::MatrixXd U = cp.unstable_frame;
        Eigen::MatrixXd G = U.transpose() * U;
        CHECK((G - Eigen::MatrixXd::Identity(G.rows(), G.cols())).norm() < 1e-10);
    }
}
