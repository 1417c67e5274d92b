#include "ghost/core.hpp"
#include "ghost/kse.hpp"
#include "ghost/mechanical.hpp"
#include "ghost/systems.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace ghost;
using Catch::Approx;

namespace {

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

// <v, (f(u+eps w) - f(u-eps w))/(2 eps)> == <(Df)^T v, w> under the system
// inner product.
void check_adjoint_consistency(const SystemDefinition& sys, std::mt19937_64& rng, double tol) {
    for (int rep = 0; rep < 20; ++rep) {
        Vector u = random_vector(sys.dim, rng);
        Vector v = random_vector(sys.dim, rng);
        Vector w = random_vector(sys.dim, rng);
        const double eps = 1e-6 * (1.0 + weighted_norm(u, sys.quad_weights));
        Vector df_w = (sys.rhs(u + eps * w) - sys.rhs(u - eps * w)) / (2.0 * eps);
        const double lhs = weighted_dot(v, df_w, sys.quad_weights);
        const double rhs = weighted_dot(sys.jtv(u, v), w, sys.quad_weights);
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
        REQUIRE(std::abs(lhs - rhs) / scale < tol);
    }
}

}  // namespace

TEST_CASE("evaluate_rhs on the built-in systems") {
    auto canonical = make_canonical(0.1);
    CHECK(evaluate_rhs(canonical, canonical.make_state(Vector::Zero(1))).coords[0] ==
          Approx(0.1));

    auto lorenz = make_lorenz(10.0, 8.0 / 3.0, 166.0);
    CHECK(evaluate_rhs(lorenz, lorenz.make_state(Vector::Zero(3))).coords.norm() == 0.0);

    auto c2 = make_canonical(-0.04);
    CHECK(evaluate_rhs(c2, c2.make_state(Vector::Constant(1, 0.2))).coords[0] ==
          Approx(0.0).margin(1e-15));

    SECTION("dimension mismatch rejected") {
        CHECK_THROWS(evaluate_rhs(lorenz, StateVector(Vector::Zero(2))));
    }
}

TEST_CASE("jacobian_transpose_apply closed forms") {
    auto lorenz = make_lorenz(10.0, 8.0 / 3.0, 166.0);
    Vector v(3);
    v << 1, 0, 0;
    Vector out = jacobian_transpose_apply(lorenz, lorenz.make_state(Vector::Zero(3)),
                                          lorenz.make_state(v))
                     .coords;
    CHECK(out[0] == Approx(-10.0));
    CHECK(out[1] == Approx(10.0));
    CHECK(out[2] == Approx(0.0).margin(1e-15));

    auto canonical = make_canonical(0.3);
    const double x = 0.7, w = -1.3;
    CHECK(jacobian_transpose_apply(canonical, canonical.make_state(Vector::Constant(1, x)),
                                   canonical.make_state(Vector::Constant(1, w)))
              .coords[0] == Approx(2.0 * x * w));

    SECTION("full Lorenz transpose row identities") {
        std::mt19937_64 rng(7);
        Vector u = random_vector(3, rng, 10.0);
        Vector vv = random_vector(3, rng);
        Vector got = lorenz.jtv(u, vv);
        const double sigma = 10.0, beta = 8.0 / 3.0, rho = 166.0;
        CHECK(got[0] == Approx(-sigma * vv[0] + (rho - u[2]) * vv[1] + u[1] * vv[2]));
        CHECK(got[1] == Approx(sigma * vv[0] - vv[1] + u[0] * vv[2]));
        CHECK(got[2] == Approx(-u[0] * vv[1] - beta * vv[2]));
    }
}

TEST_CASE("KSE adjoint matches the finite-difference Jacobian") {
    auto kse = make_kse(39.0, 16);
    std::mt19937_64 rng(11);
    Vector u = random_vector(16, rng);
    // the KSE right-hand side is quadratic, so central differences of f give
    // the exact Jacobian action up to roundoff
    const double eps = 1e-4;
    for (int rep = 0; rep < 20; ++rep) {
        Vector v = random_vector(16, rng);
        Vector w = random_vector(16, rng);
        Vector df_w = (kse.rhs(u + eps * w) - kse.rhs(u - eps * w)) / (2.0 * eps);
        const double lhs = weighted_dot(v, df_w, kse.quad_weights);
        const double rhs = weighted_dot(kse.jtv(u, v), w, kse.quad_weights);
        REQUIRE(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-12) < 1e-10);
    }
}

TEST_CASE("inner_product basics") {
    StateVector a(Vector(2)), b(Vector(2));
    a.coords << 1, 2;
    b.coords << 3, 4;
    CHECK(inner_product(a, b) == Approx(11.0));
    StateVector z(Vector::Zero(5));
    CHECK(inner_product(z, z) == 0.0);
    CHECK_THROWS(inner_product(a, z));
}

TEST_CASE("quadrature weights integrate sin^2 exactly") {
    const double L = 39.0;
    const int nx = 64;
    StateVector s(Vector(nx), Vector::Constant(nx, L / nx));
    for (int j = 0; j < nx; ++j)
        s.coords[j] = std::sin(2.0 * std::numbers::pi * j / nx);
    CHECK(inner_product(s, s) == Approx(L / 2.0).epsilon(0).margin(1e-12));
}

TEST_CASE("inner_product positive definiteness") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 1 + int(rng() % 40);
        Vector v = random_vector(n, rng);
        if (v.norm() == 0.0) continue;
        StateVector s(v);
        REQUIRE(inner_product(s, s) > 0.0);
    }
}

TEST_CASE("adjoint consistency for every built-in continuous-time system") {
    std::mt19937_64 rng(31);
    check_adjoint_consistency(make_canonical(0.1), rng, 1e-5);
    check_adjoint_consistency(make_lorenz(10.0, 8.0 / 3.0, 166.0), rng, 1e-5);
    check_adjoint_consistency(make_kse(39.0, 24), rng, 1e-5);
    check_adjoint_consistency(make_mech_system(von_mises_truss({}, 0.5)), rng, 1e-5);
}
