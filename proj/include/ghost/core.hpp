#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ghost {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class SystemKind { ContinuousTime, DiscreteTime };

// State of a dynamical system: flat coordinate vector plus the quadrature
// weights realizing the L2 inner product of the underlying (possibly
// discretized) space. Empty weights mean uniform weight 1.
struct StateVector {
    Vector coords;
    Vector weights;

    StateVector() = default;
    explicit StateVector(Vector c) : coords(std::move(c)) {}
    StateVector(Vector c, Vector w) : coords(std::move(c)), weights(std::move(w)) {}

    Eigen::Index dim() const { return coords.size(); }
    bool is_finite() const { return coords.allFinite(); }
};

inline double inner_product(const StateVector& a, const StateVector& b) {
    if (a.coords.size() != b.coords.size())
        throw std::invalid_argument("inner_product: length mismatch");
    if (a.weights.size() == 0 && b.weights.size() == 0)
        return a.coords.dot(b.coords);
    const Vector& w = a.weights.size() ? a.weights : b.weights;
    if (w.size() != a.coords.size())
        throw std::invalid_argument("inner_product: weight length mismatch");
    if (b.weights.size() && a.weights.size() && !a.weights.isApprox(b.weights))
        throw std::invalid_argument("inner_product: weights differ");
    return a.coords.cwiseProduct(w).dot(b.coords);
}

inline double norm(const StateVector& a) { return std::sqrt(inner_product(a, a)); }

// Weighted inner product on raw coordinate vectors; empty weights = uniform.
inline double weighted_dot(const Vector& a, const Vector& b, const Vector& w) {
    if (w.size() == 0)
        return a.dot(b);
    return a.cwiseProduct(w).dot(b);
}

inline double weighted_norm(const Vector& a, const Vector& w) {
    return std::sqrt(weighted_dot(a, a, w));
}

// A dynamical system du/dt = f(u) (or map x -> f(x)) given by callbacks.
// rhs evaluates f; jtv applies the adjoint of the Jacobian with respect to
// the system's quadrature-weighted inner product. Matrix-free throughout:
// no Jacobian is ever formed by the library.
struct SystemDefinition {
    std::string name;
    Eigen::Index dim = 0;
    std::map<std::string, double> params;
    SystemKind kind = SystemKind::ContinuousTime;

    std::function<Vector(const Vector&)> rhs;                  // f(u)
    std::function<Vector(const Vector&, const Vector&)> jtv;   // (Df(u))^T v
    Vector quad_weights;                                       // empty = uniform

    // Optional batched evaluation over many states at once (rows of the
    // matrix arguments are states); loop-space code falls back to row-wise
    // application of rhs/jtv when absent.
    std::function<Matrix(const Matrix&)> rhs_batch;
    std::function<Matrix(const Matrix&, const Matrix&)> jtv_batch;

    // Diagonal symbol of the linear part of f in the state basis, when the
    // system has a stiff diagonal linear operator (KSE sine modes). Used by
    // the descent engine's integrating-factor steps; empty otherwise.
    Vector linear_symbol;

    // Specialized time stepper (e.g. exponential integrator for the KSE);
    // generic RK4 is used when absent.
    std::function<Vector(const Vector&, double)> time_step;

    double param(const std::string& key) const {
        auto it = params.find(key);
        if (it == params.end())
            throw std::invalid_argument("system '" + name + "' has no parameter '" + key + "'");
        return it->second;
    }

    StateVector make_state(Vector coords) const {
        if (coords.size() != dim)
            throw std::invalid_argument("make_state: dimension mismatch");
        return StateVector(std::move(coords), quad_weights);
    }
};

inline void check_dim(const SystemDefinition& sys, const Vector& u, const char* where) {
    if (u.size() != sys.dim)
        throw std::invalid_argument(std::string(where) + ": state dimension " +
                                    std::to_string(u.size()) + " != system dimension " +
                                    std::to_string(sys.dim));
}

// f(u) at the current parameter values. Non-finite output is reported, not
// silently propagated.
inline StateVector evaluate_rhs(const SystemDefinition& sys, const StateVector& u) {
    check_dim(sys, u.coords, "evaluate_rhs");
    Vector f = sys.rhs(u.coords);
    if (!f.allFinite())
        throw std::runtime_error("evaluate_rhs: non-finite output (invalid state)");
    return sys.make_state(std::move(f));
}

// (Df(u))^T v under the system's inner product.
inline StateVector jacobian_transpose_apply(const SystemDefinition& sys, const StateVector& u,
                                            const StateVector& v) {
    check_dim(sys, u.coords, "jacobian_transpose_apply");
    check_dim(sys, v.coords, "jacobian_transpose_apply");
    if (!sys.jtv)
        throw std::runtime_error("system '" + sys.name + "' has no adjoint registration");
    return sys.make_state(sys.jtv(u.coords, v.coords));
}

// Terminal classification of a fictitious-time descent run.
enum class Classification {
    InvariantSolution,
    GhostCandidate,
    Stalled,
    Diverged,
    CollapsedToEquilibrium,
};

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::InvariantSolution: return "InvariantSolution";
        case Classification::GhostCandidate: return "GhostCandidate";
        case Classification::Stalled: return "Stalled";
        case Classification::Diverged: return "Diverged";
        case Classification::CollapsedToEquilibrium: return "CollapsedToEquilibrium";
    }
    return "?";
}

struct HistoryEntry {
    double tau;
    double cost;       // J (square root of the cost function)
    double grad_norm;
    double dtau;
};

template <class State>
struct DescentResult {
    State final_state;
    double final_cost = 0.0;   // J
    Classification classification = Classification::Stalled;
    std::vector<HistoryEntry> cost_history;
    double grad_norm = 0.0;
    double tau_end = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
    std::string diagnostic;
};

}  // namespace ghost
