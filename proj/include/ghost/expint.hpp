#pragma once

#include <cmath>

namespace ghost {

// phi functions of exponential integrators, real arguments. Taylor series
// below |z| = 0.5 to avoid cancellation, closed form otherwise.
namespace detail {

inline double phi_series(double z, int offset) {
    double fact = 1.0;
    for (int i = 1; i <= offset; ++i) fact *= i;
    double term = 1.0 / fact;
    double sum = term;
    for (int n = 1; n <= 24; ++n) {
        term *= z / (n + offset);
        sum += term;
    }
    return sum;
}

}  // namespace detail

inline double phi1(double z) {
    if (std::abs(z) < 0.5) return detail::phi_series(z, 1);
    return std::expm1(z) / z;
}

inline double phi2(double z) {
    if (std::abs(z) < 0.5) return detail::phi_series(z, 2);
    return (phi1(z) - 1.0) / z;
}

inline double phi3(double z) {
    if (std::abs(z) < 0.5) return detail::phi_series(z, 3);
    return (phi2(z) - 0.5) / z;
}

}  // namespace ghost
