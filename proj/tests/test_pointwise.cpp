#include "ghost/pointwise.hpp"
#include "ghost/systems.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace ghost;
using Catch::Approx;

namespace {
const double kRoot33 = std::sqrt(33.0);
const double kGhostLocus = (9.0 - kRoot33) / 24.0;
const double kUpperCritical = (9.0 + kRoot33) / 24.0;
const double kRhoStar = (33.0 * kRoot33 - 115.0) / 668.0;
}  // namespace

TEST_CASE("equilibrium_cost closed forms") {
    auto canonical = make_canonical(0.1);
    CHECK(equilibrium_cost(canonical, canonical.make_state(Vector::Zero(1))) ==
          Approx(0.005));

    auto c2 = make_canonical(-0.04);
    CHECK(equilibrium_cost(c2, c2.make_state(Vector::Constant(1, 0.2))) ==
          Approx(0.0).margin(1e-30));
    CHECK(equilibrium_cost(c2, c2.make_state(Vector::Constant(1, -0.2))) ==
          Approx(0.0).margin(1e-30));

    // analytic Lorenz equilibrium C+ at rho = 166
    const double beta = 8.0 / 3.0;
    auto lorenz = make_lorenz(10.0, beta, 166.0);
    Vector cplus(3);
    cplus << std::sqrt(beta * 165.0), std::sqrt(beta * 165.0), 165.0;
    CHECK(equilibrium_cost(lorenz, lorenz.make_state(cplus)) < 1e-20);
}

TEST_CASE("equilibrium_descent_rhs closed forms and gradient oracle") {
    auto c0 = make_canonical(0.0);
    CHECK(equilibrium_descent_rhs(c0, c0.make_state(Vector::Ones(1))).coords[0] ==
          Approx(-2.0));
    auto c1 = make_canonical(0.7);
    CHECK(equilibrium_descent_rhs(c1, c1.make_state(Vector::Zero(1))).coords[0] == 0.0);

    // finite differences of the cost reproduce -rhs
    auto lorenz = make_lorenz(10.0, 8.0 / 3.0, 166.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 5.0);
    for (int rep = 0; rep < 50; ++rep) {
        Vector u(3);
        for (int i = 0; i < 3; ++i) u[i] = gauss(rng);
        Vector g = equilibrium_descent_rhs(lorenz, lorenz.make_state(u)).coords;
        for (int i = 0; i < 3; ++i) {
            const double eps = 1e-6 * (1.0 + u.norm());
            Vector up = u, um = u;
            up[i] += eps;
            um[i] -= eps;
            const double fd = (equilibrium_cost(lorenz, lorenz.make_state(up)) -
                               equilibrium_cost(lorenz, lorenz.make_state(um))) /
                              (2.0 * eps);
            REQUIRE(std::abs(-fd - g[i]) / std::max(std::abs(fd), 1e-8) < 1e-5);
        }
    }
}

TEST_CASE("map definition is internally consistent") {
    auto m = make_cubic_map_definition(0.12);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unif(-1.0, 1.5);
    for (int rep = 0; rep < 50; ++rep) {
        const double x = unif(rng);
        const double eps = 1e-6;
        const double fd = (m.f(x + eps) - m.f(x - eps)) / (2.0 * eps);
        REQUIRE(std::abs(fd - m.fprime(x)) / std::max(1.0, std::abs(fd)) < 1e-6);
        // coefficients evaluate to the same polynomial
        double poly = 0.0, xp = 1.0;
        for (double c : m.coefficients) {
            poly += c * xp;
            xp *= x;
        }
        REQUIRE(poly == Approx(m.f(x)).margin(1e-14));
    }
}

TEST_CASE("map_fixed_point_cost") {
    SECTION("vanishes at real fixed points below the fold") {
        auto m = make_cubic_map_definition(0.07);
        for (const auto& root : complex_fixed_points(m)) {
            REQUIRE(std::abs(root.imag()) < 1e-12);
            CHECK(map_fixed_point_cost(m, root.real()) < 1e-24);
        }
    }
    SECTION("rho = 0: x = 0 is a fixed point") {
        MapDefinition m;
        m.f = [](double x) { return cubic_map_apply(0.0, x); };
        m.fprime = [](double x) { return cubic_map_derivative(0.0, x); };
        CHECK(map_fixed_point_cost(m, 0.0) == 0.0);
    }
    SECTION("ghost locus is a strictly positive local minimum above the fold") {
        auto m = make_cubic_map_definition(0.12);
        const double j2 = map_fixed_point_cost(m, kGhostLocus);
        CHECK(j2 > 0.0);
        CHECK(map_fixed_point_cost(m, kGhostLocus + 1e-4) > j2);
        CHECK(map_fixed_point_cost(m, kGhostLocus - 1e-4) > j2);
    }
}

TEST_CASE("map_cost_gradient") {
    SECTION("vanishes at the critical points for any rho") {
        for (double rho : {0.07, 0.12, 0.15}) {
            auto m = make_cubic_map_definition(rho);
            CHECK(std::abs(m.fprime(kGhostLocus) - 1.0) < 1e-12);
            CHECK(std::abs(m.fprime(kUpperCritical) - 1.0) < 1e-12);
        }
    }
    SECTION("vanishes at fixed points") {
        auto m = make_cubic_map_definition(0.07);
        for (const auto& root : complex_fixed_points(m))
            CHECK(std::abs(map_cost_gradient(m, root.real())) < 1e-10);
    }
    SECTION("matches central finite differences of the cost") {
        auto m = make_cubic_map_definition(0.12);
        const double x = 0.2, eps = 1e-6;
        const double fd =
            (map_fixed_point_cost(m, x + eps) - map_fixed_point_cost(m, x - eps)) / (2.0 * eps);
        CHECK(map_cost_gradient(m, x) == Approx(fd).margin(1e-8));
    }
}

TEST_CASE("map_critical_points") {
    SECTION("cubic map roots are parameter independent") {
        std::vector<double> prev;
        for (double rho : {0.07, 0.12, 0.15}) {
            auto pts = map_critical_points(make_cubic_map_definition(rho));
            REQUIRE(pts.size() == 2);
            CHECK(pts[0].x == Approx(kGhostLocus).margin(1e-12));
            CHECK(pts[1].x == Approx(kUpperCritical).margin(1e-12));
            std::vector<double> cur{pts[0].x, pts[1].x};
            if (!prev.empty()) {
                CHECK(cur[0] == prev[0]);  // bitwise stable across rho
                CHECK(cur[1] == prev[1]);
            }
            prev = cur;
        }
    }
    SECTION("extremum type flips at the fold for the smaller root") {
        auto below = map_critical_points(make_cubic_map_definition(0.10));
        auto above = map_critical_points(make_cubic_map_definition(0.12));
        CHECK(below[0].type == ExtremumType::Maximum);
        CHECK(above[0].type == ExtremumType::Minimum);
        CHECK(below[1].type == ExtremumType::Maximum);
        CHECK(above[1].type == ExtremumType::Maximum);
    }
    SECTION("affine map has no critical points") {
        MapDefinition affine;
        affine.name = "affine";
        affine.f = [](double x) { return 2.0 * x; };
        affine.fprime = [](double) { return 2.0; };
        affine.coefficients = {0.0, 2.0};
        CHECK(map_critical_points(affine).empty());
    }
    SECTION("returned points are stationary points of the cost") {
        auto m = make_cubic_map_definition(0.13);
        for (const auto& p : map_critical_points(m))
            CHECK(std::abs(map_cost_gradient(m, p.x)) < 1e-12);
    }
}

TEST_CASE("complex_fixed_points") {
    SECTION("ghost pair above the fold at rho = 0.12") {
        auto roots = complex_fixed_points(make_cubic_map_definition(0.12));
        REQUIRE(roots.size() == 3);
        bool found = false;
        for (const auto& r : roots)
            if (std::abs(r.real() - 0.134355) < 1e-5 &&
                std::abs(std::abs(r.imag()) - 0.0430683) < 1e-5)
                found = true;
        CHECK(found);
    }
    SECTION("three real roots below the fold") {
        auto roots = complex_fixed_points(make_cubic_map_definition(0.07));
        REQUIRE(roots.size() == 3);
        for (const auto& r : roots) CHECK(std::abs(r.imag()) < 1e-12);
    }
    SECTION("double root at the fold") {
        auto roots = complex_fixed_points(make_cubic_map_definition(kRhoStar));
        REQUIRE(roots.size() == 3);
        std::sort(roots.begin(), roots.end(),
                  [](auto a, auto b) { return a.real() < b.real(); });
        CHECK(std::abs(roots[1] - roots[0]) < 1e-6);
    }
    SECTION("roots factor the polynomial") {
        auto m = make_cubic_map_definition(0.12);
        auto roots = complex_fixed_points(m);
        const double lead = m.coefficients[3];
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> unif(-1.0, 1.5);
        for (int rep = 0; rep < 5; ++rep) {
            const double x = unif(rng);
            std::complex<double> prod = lead;
            for (const auto& r : roots) prod *= (x - r);
            const double expected = m.f(x) - x;
            REQUIRE(std::abs(prod - expected) / std::max(std::abs(expected), 1e-10) < 1e-8);
        }
    }
    SECTION("ghost-pair real part moves with rho, unlike the critical points") {
        auto ghost_real = [](double rho) {
            for (const auto& r : complex_fixed_points(make_cubic_map_definition(rho)))
                if (std::abs(r.imag()) > 1e-8 && r.imag() > 0) return r.real();
            throw std::runtime_error("no complex pair");
        };
        CHECK(std::abs(ghost_real(0.115) - ghost_real(0.15)) > 1e-4);
    }
}
