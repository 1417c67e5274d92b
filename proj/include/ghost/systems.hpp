#pragma once

#include "ghost/core.hpp"

namespace ghost {

// Canonical saddle-node normal form dx/dt = r + x^2. Two equilibria
// x = +-sqrt(-r) for r < 0, none for r > 0; the ghost sits at x = 0.
inline SystemDefinition make_canonical(double r) {
    SystemDefinition sys;
    sys.name = "canonical";
    sys.dim = 1;
    sys.params = {{"r", r}};
    sys.kind = SystemKind::ContinuousTime;
    sys.rhs = [r](const Vector& u) {
        Vector f(1);
        f[0] = r + u[0] * u[0];
        return f;
    };
    sys.jtv = [](const Vector& u, const Vector& v) {
        Vector w(1);
        w[0] = 2.0 * u[0] * v[0];
        return w;
    };
    return sys;
}

// Lorenz 1963 system. The optional cost weight alpha scales the z-residual
// in the weighted loop cost; it does not change the dynamics.
inline SystemDefinition make_lorenz(double sigma, double beta, double rho) {
    if (sigma <= 0 || beta <= 0)
        throw std::invalid_argument("make_lorenz: sigma, beta must be positive");
    SystemDefinition sys;
    sys.name = "lorenz";
    sys.dim = 3;
    sys.params = {{"sigma", sigma}, {"beta", beta}, {"rho", rho}};
    sys.kind = SystemKind::ContinuousTime;
    sys.rhs = [sigma, beta, rho](const Vector& u) {
        Vector f(3);
        f[0] = sigma * (u[1] - u[0]);
        f[1] = u[0] * (rho - u[2]) - u[1];
        f[2] = u[0] * u[1] - beta * u[2];
        return f;
    };
    sys.jtv = [sigma, beta, rho](const Vector& u, const Vector& v) {
        const double x = u[0], y = u[1], z = u[2];
        Vector w(3);
        w[0] = -sigma * v[0] + (rho - z) * v[1] + y * v[2];
        w[1] = sigma * v[0] - v[1] + x * v[2];
        w[2] = -x * v[1] - beta * v[2];
        return w;
    };
    return sys;
}

// Cubic polynomial map x_{n+1} = (rho-1)(8x^3 - 9x^2) + 2 rho x - x + rho.
inline double cubic_map_apply(double rho, double x) {
    return (rho - 1.0) * (8.0 * x * x * x - 9.0 * x * x) + 2.0 * rho * x - x + rho;
}

inline double cubic_map_derivative(double rho, double x) {
    return (rho - 1.0) * (24.0 * x * x - 18.0 * x) + 2.0 * rho - 1.0;
}

// Coefficients of the cubic map, ascending order.
inline std::vector<double> cubic_map_coefficients(double rho) {
    return {rho, 2.0 * rho - 1.0, -9.0 * (rho - 1.0), 8.0 * (rho - 1.0)};
}

inline SystemDefinition make_cubic_map(double rho) {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("make_cubic_map: rho must lie in (0,1)");
    SystemDefinition sys;
    sys.name = "cubic-map";
    sys.dim = 1;
    sys.params = {{"rho", rho}};
    sys.kind = SystemKind::DiscreteTime;
    sys.rhs = [rho](const Vector& u) {
        Vector f(1);
        f[0] = cubic_map_apply(rho, u[0]);
        return f;
    };
    sys.jtv = [rho](const Vector& u, const Vector& v) {
        Vector w(1);
        w[0] = cubic_map_derivative(rho, u[0]) * v[0];
        return w;
    };
    return sys;
}

}  // namespace ghost
