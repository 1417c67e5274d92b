#include "ghost/kse.hpp"
#include "ghost/systems.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace ghost;
using Catch::Approx;

namespace {

Vector random_modes(int k, std::mt19937_64& rng, double decay = 0.0) {
    std::normal_distribution<double> gauss;
    Vector a(k);
    for (int i = 0; i < k; ++i) a[i] = gauss(rng) * std::exp(-decay * (i + 1));
    return a;
}

// Modes of u u_x from the sine-product identities:
// sin(k t) cos(j t) = (sin((k+j)t) + sin((k-j)t)) / 2.
Vector convolution_oracle(const Vector& a, double L, int out_modes) {
    const int K = int(a.size());
    const double q = 2.0 * std::numbers::pi / L;
    Vector out = Vector::Zero(out_modes);
    for (int k = 1; k <= K; ++k) {
        for (int j = 1; j <= K; ++j) {
            const double coef = 0.5 * a[k - 1] * a[j - 1] * (j * q);
            const int sum = k + j;
            if (sum <= out_modes) out[sum - 1] += coef;
            const int diff = k - j;
            if (diff >= 1 && diff <= out_modes) out[diff - 1] += coef;
            if (diff <= -1 && -diff <= out_modes) out[-diff - 1] -= coef;
        }
    }
    return out;
}

}  // namespace

TEST_CASE("kse_rhs") {
    SECTION("zero maps to zero") {
        auto kse = make_kse(39.0, 16);
        CHECK(kse.rhs(Vector::Zero(16)).norm() == 0.0);
    }
    SECTION("linearization about zero is diagonal with symbol q^2 - q^4") {
        const double L = 39.0;
        auto kse = make_kse(L, 16);
        const double eps = 1e-8;
        Vector a = Vector::Zero(16);
        a[0] = eps;
        Vector f = kse.rhs(a);
        const double q = 2.0 * std::numbers::pi / L;
        CHECK(f[0] / eps == Approx(q * q - q * q * q * q).epsilon(1e-6));
        // nonlinear part is O(eps^2) and lands in mode 2
        CHECK(std::abs(f[1]) == Approx(0.5 * eps * eps * q).epsilon(1e-6));
        for (int k = 2; k < 16; ++k) CHECK(std::abs(f[k]) < 1e-18);
    }
    SECTION("nonlinear term matches the direct convolution sum") {
        const double L = 39.0;
        auto kse = make_kse(L, 16);
        std::mt19937_64 rng(17);
        Vector a = random_modes(16, rng);
        Vector f = kse.rhs(a);
        Vector lin = kse.linear_symbol.cwiseProduct(a);
        Vector nl_expected = -convolution_oracle(a, L, 16);
        Vector nl = f - lin;
        REQUIRE((nl - nl_expected).norm() / nl_expected.norm() < 1e-8);
    }
}

TEST_CASE("kse_adjoint_apply") {
    const double L = 39.0;
    auto kse = make_kse(L, 16);
    SECTION("linear part is self-adjoint with multiplier q^2 - q^4") {
        std::mt19937_64 rng(19);
        Vector r = random_modes(16, rng);
        Vector out = kse.jtv(Vector::Zero(16), r);
        for (int k = 0; k < 16; ++k)
            CHECK(out[k] == Approx(kse.linear_symbol[k] * r[k]).margin(1e-14));
    }
    SECTION("exact transpose of the discrete Jacobian") {
        std::mt19937_64 rng(21);
        Vector u = random_modes(16, rng);
        const double eps = 1e-4;  // quadratic rhs: central differences are exact
        for (int rep = 0; rep < 20; ++rep) {
            Vector r = random_modes(16, rng);
            Vector w = random_modes(16, rng);
            Vector df_w = (kse.rhs(u + eps * w) - kse.rhs(u - eps * w)) / (2.0 * eps);
            const double lhs = weighted_dot(r, df_w, kse.quad_weights);
            const double rhs = weighted_dot(kse.jtv(u, r), w, kse.quad_weights);
            REQUIRE(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-12) < 1e-10);
        }
    }
    SECTION("zero covector maps to zero") {
        std::mt19937_64 rng(23);
        Vector u = random_modes(16, rng);
        CHECK(kse.jtv(u, Vector::Zero(16)).norm() == 0.0);
    }
}

TEST_CASE("kse half-grid products equal full-grid products with odd extension") {
    const double L = 39.0;
    const int K = 12, Nx = 64;
    KseSpectral sp(L, K, Nx);
    std::mt19937_64 rng(29);
    Vector a = random_modes(K, rng);

    // full periodic grid evaluation
    Vector uf(Nx), uxf(Nx);
    const double q = 2.0 * std::numbers::pi / L;
    for (int j = 0; j < Nx; ++j) {
        double u = 0, ux = 0;
        for (int k = 1; k <= K; ++k) {
            const double th = 2.0 * std::numbers::pi * k * j / Nx;
            u += a[k - 1] * std::sin(th);
            ux += a[k - 1] * k * q * std::cos(th);
        }
        uf[j] = u;
        uxf[j] = ux;
    }
    Vector prod = uf.cwiseProduct(uxf);
    Vector modes_full(K);
    for (int k = 1; k <= K; ++k) {
        double s = 0;
        for (int j = 0; j < Nx; ++j)
            s += prod[j] * std::sin(2.0 * std::numbers::pi * k * j / Nx);
        modes_full[k - 1] = 2.0 * s / Nx;
    }
    Vector nl = -sp.nonlinear(a);
    REQUIRE((nl - modes_full).norm() < 1e-12 * std::max(1.0, modes_full.norm()));
}

TEST_CASE("kse spectral convergence in K") {
    const double L = 39.0;
    std::mt19937_64 rng(31);
    Vector smooth = random_modes(32, rng, 0.6);
    auto k32 = make_kse(L, 32);
    auto k64 = make_kse(L, 64);
    Vector a64 = Vector::Zero(64);
    a64.head(32) = smooth;
    Vector f32 = k32.rhs(smooth);
    Vector f64 = k64.rhs(a64);
    CHECK((f64.head(32) - f32).norm() < 1e-10);
    CHECK(f64.tail(32).norm() < 1e-8);
}

TEST_CASE("kse energy identity") {
    // d/dt int u^2/2 = <u, f(u)> = int (u_x^2 - u_xx^2); the nonlinear term
    // contributes nothing on the dealiased grid.
    const double L = 39.0;
    auto kse = make_kse(L, 24);
    std::mt19937_64 rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        Vector a = random_modes(24, rng);
        const double lhs = weighted_dot(a, kse.rhs(a), kse.quad_weights);
        double rhs = 0.0;
        for (int k = 1; k <= 24; ++k) {
            const double q = 2.0 * std::numbers::pi * k / L;
            rhs += 0.5 * L * (q * q - q * q * q * q) * a[k - 1] * a[k - 1];
        }
        REQUIRE(std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-12) < 1e-8);
    }
}

TEST_CASE("kse_time_step") {
    const double L = 39.0;
    auto kse = make_kse(L, 24);
    SECTION("zero is a fixed point") {
        CHECK(kse.time_step(Vector::Zero(24), 0.1).norm() == 0.0);
    }
    SECTION("fourth-order convergence in dt") {
        std::mt19937_64 rng(41);
        Vector a0 = random_modes(24, rng, 0.4);
        auto integrate = [&](double dt, double t_end) {
            Vector a = a0;
            const long n = std::lround(t_end / dt);
            for (long i = 0; i < n; ++i) a = kse.time_step(a, dt);
            return a;
        };
        Vector fine = integrate(0.003125, 2.0);
        const double e1 = (integrate(0.025, 2.0) - fine).norm();
        const double e2 = (integrate(0.0125, 2.0) - fine).norm();
        CHECK(e1 / e2 > 10.0);  // approaches 16 once out of the stiff regime
        CHECK((integrate(0.05, 2.0) - fine).norm() < 1e-5);
    }
    SECTION("blow-up detection") {
        Vector huge = Vector::Constant(24, 1e7);
        CHECK_THROWS(kse.time_step(huge, 0.1));
    }
}

TEST_CASE("cubic map closed forms") {
    CHECK(cubic_map_apply(0.37, 0.0) == Approx(0.37));
    const double rho = 0.12, x = 0.45, eps = 1e-7;
    CHECK(cubic_map_derivative(rho, x) ==
          Approx((cubic_map_apply(rho, x + eps) - cubic_map_apply(rho, x - eps)) / (2 * eps))
              .epsilon(1e-6));
}

TEST_CASE("canonical adjoint is exactly 2x") {
    auto c = make_canonical(-0.3);
    Vector u = Vector::Constant(1, 1.7), v = Vector::Constant(1, -2.0);
    CHECK(c.jtv(u, v)[0] == 2.0 * 1.7 * -2.0);
}
