#pragma once

#include "ghost/core.hpp"
#include "ghost/systems.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <optional>

namespace ghost {

// J^2 = (1/2) <f(u), f(u)> under the system's inner product; zero exactly
// on equilibria.
inline double equilibrium_cost(const SystemDefinition& sys, const StateVector& u) {
    if (sys.kind != SystemKind::ContinuousTime)
        throw std::invalid_argument("equilibrium_cost: continuous-time systems only");
    StateVector f = evaluate_rhs(sys, u);
    return 0.5 * inner_product(f, f);
}

// -(Df(u))^T f(u), the negative gradient of equilibrium_cost.
inline StateVector equilibrium_descent_rhs(const SystemDefinition& sys, const StateVector& u) {
    StateVector f = evaluate_rhs(sys, u);
    StateVector g = jacobian_transpose_apply(sys, u, f);
    g.coords = -g.coords;
    return g;
}

// Scalar map x -> f(x) with derivative; polynomial coefficients (ascending)
// are optional and enable the root-based operations.
struct MapDefinition {
    std::string name;
    std::map<std::string, double> params;
    std::function<double(double)> f;
    std::function<double(double)> fprime;
    std::vector<double> coefficients;  // empty if the map is not polynomial

    // Coefficients of (a nonzero constant multiple of) f'(x) - 1. Factories
    // supply this with common parameter factors cancelled so the critical
    // points come out identical across parameter values; derived from
    // `coefficients` when empty.
    std::vector<double> critical_coefficients;

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end())
            throw std::invalid_argument("map '" + name + "' has no parameter '" + key + "'");
        return it->second;
    }
};

inline MapDefinition make_cubic_map_definition(double rho) {
    MapDefinition m;
    m.name = "cubic-map";
    m.params = {{"rho", rho}};
    m.f = [rho](double x) { return cubic_map_apply(rho, x); };
    m.fprime = [rho](double x) { return cubic_map_derivative(rho, x); };
    m.coefficients = cubic_map_coefficients(rho);
    m.critical_coefficients = {2.0, -18.0, 24.0};  // f'(x) - 1 = (rho-1)(24x^2 - 18x + 2)
    return m;
}

// J^2(x) = (1/2)(f(x) - x)^2.
inline double map_fixed_point_cost(const MapDefinition& m, double x) {
    const double d = m.f(x) - x;
    return 0.5 * d * d;
}

// dJ^2/dx = (f(x) - x)(f'(x) - 1).
inline double map_cost_gradient(const MapDefinition& m, double x) {
    return (m.f(x) - x) * (m.fprime(x) - 1.0);
}

namespace detail {

// All complex roots of a polynomial (ascending coefficients) via the
// eigenvalues of its companion matrix.
inline std::vector<std::complex<double>> polynomial_roots(std::vector<double> coeffs) {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    const int deg = int(coeffs.size()) - 1;
    if (deg < 1) return {};
    Matrix companion = Matrix::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
    Eigen::EigenSolver<Matrix> es(companion, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(deg);
    for (int i = 0; i < deg; ++i) roots[i] = es.eigenvalues()[i];
    std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

}  // namespace detail

enum class ExtremumType { Minimum, Maximum };

struct CriticalPoint {
    double x;
    ExtremumType type;  // extremum type of J^2 at the point
};

// Real roots of f'(x) = 1 (the non-fixed-point extrema of the map cost),
// sorted ascending, each classified as minimum or maximum of J^2 by the
// second difference at spacing 1e-4.
inline std::vector<CriticalPoint> map_critical_points(const MapDefinition& m) {
    std::vector<double> dc = m.critical_coefficients;
    if (dc.empty()) {
        if (m.coefficients.empty())
            throw std::invalid_argument("map_critical_points: polynomial coefficients required");
        dc.resize(m.coefficients.size() > 1 ? m.coefficients.size() - 1 : 0);
        for (size_t i = 1; i < m.coefficients.size(); ++i) dc[i - 1] = double(i) * m.coefficients[i];
        if (!dc.empty()) dc[0] -= 1.0;  // roots of f'(x) - 1
    }
    std::vector<std::complex<double>> roots = detail::polynomial_roots(dc);
    std::vector<CriticalPoint> out;
    const double h = 1e-4;
    for (const auto& r : roots) {
        if (std::abs(r.imag()) > 1e-10) continue;
        const double x = r.real();
        const double second =
            map_fixed_point_cost(m, x + h) - 2.0 * map_fixed_point_cost(m, x) +
            map_fixed_point_cost(m, x - h);
        out.push_back({x, second > 0 ? ExtremumType::Minimum : ExtremumType::Maximum});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    return out;
}

// All roots of f(x) - x = 0 over the complex numbers, real roots included.
inline std::vector<std::complex<double>> complex_fixed_points(const MapDefinition& m) {
    if (m.coefficients.empty())
        throw std::invalid_argument("complex_fixed_points: polynomial coefficients required");
    std::vector<double> c = m.coefficients;
    if (c.size() < 2) c.resize(2, 0.0);
    c[1] -= 1.0;
    return detail::polynomial_roots(c);
}

}  // namespace ghost
