#pragma once

#include "ghost/core.hpp"
#include "ghost/expint.hpp"
#include "ghost/pointwise.hpp"

#include <concepts>
#include <deque>
#include <limits>
#include <optional>
#include <random>

namespace ghost {

// Controls for the fictitious-time descent. tol_solution is stated on J
// (the square root of the cost), which presents both common stopping
// conventions in one knob; see the presets below.
struct DescentConfig {
    double tol_solution = 1e-12;  // J below this -> InvariantSolution
    double tol_grad = 1e-10;      // relative gradient norm -> GhostCandidate
    int stall_window = 200;       // accepted steps
    double stall_rel_drop = 1e-8;
    double tau_max = 1e12;
    double dtau_init = 1e-3;
    double dtau_min = 1e-15;
    double dtau_max = 1e8;
    double safety = 0.5;          // step shrink factor on rejection
    long max_steps = 50'000'000;  // accepted-step budget
    int history_stride = 1;
    double collapse_ratio = 1e-6;  // loop arclength ratio flagging collapse
    double period_floor = 1e-3;    // T_min for loop descent

    // Stopping threshold used for periodic orbits (J = 1e-12).
    static DescentConfig orbit_preset() { return DescentConfig{}; }
    // Stopping threshold used for mechanical fixed points (J^2 = 1e-20).
    static DescentConfig mechanical_preset() {
        DescentConfig c;
        c.tol_solution = 1e-10;
        return c;
    }

    void validate() const {
        if (!(dtau_min > 0 && dtau_min <= dtau_init && dtau_init <= dtau_max))
            throw std::invalid_argument("DescentConfig: need 0 < dtau_min <= dtau_init <= dtau_max");
        if (!(tol_solution > 0)) throw std::invalid_argument("DescentConfig: tol_solution > 0");
        if (!(safety > 0 && safety < 1)) throw std::invalid_argument("DescentConfig: safety in (0,1)");
    }
};

// A descent problem exposes the cost J^2, the descent right-hand side
// (negative cost gradient under the problem metric), stepping, and a flat
// coordinate view used for metric norms, random directions, and curvature
// probes.
template <class P>
concept GradientFlowProblem = requires(const P& p, const typename P::State& x, double h) {
    { p.cost(x) } -> std::convertible_to<double>;
    { p.descent_rhs(x) } -> std::same_as<typename P::State>;
    { p.apply_step(x, x, h) } -> std::same_as<std::optional<typename P::State>>;
    { p.flatten(x) } -> std::same_as<Vector>;
    { p.unflatten_like(x, Vector()) } -> std::same_as<typename P::State>;
    { p.metric_weights(x) } -> std::same_as<Vector>;
    { p.is_finite(x) } -> std::convertible_to<bool>;
};

template <class P>
concept HasAdvance = requires(const P& p, const typename P::State& x, double h) {
    { p.advance(x, x, h) } -> std::same_as<std::optional<typename P::State>>;
};

template <class P>
concept HasDegeneracy = requires(const P& p, const typename P::State& x) {
    { p.degeneracy(x) } -> std::convertible_to<double>;
};

template <GradientFlowProblem P>
double metric_norm(const P& p, const typename P::State& base, const typename P::State& tangent) {
    Vector v = p.flatten(tangent);
    return std::sqrt(v.cwiseAbs2().dot(p.metric_weights(base)));
}

template <GradientFlowProblem P>
double state_distance(const P& p, const typename P::State& a, const typename P::State& b) {
    Vector d = p.flatten(a) - p.flatten(b);
    return std::sqrt(d.cwiseAbs2().dot(p.metric_weights(a)));
}

template <GradientFlowProblem P>
typename P::State random_tangent(const P& p, const typename P::State& base,
                                 std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Vector v(p.flatten(base).size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    const double n = std::sqrt(v.cwiseAbs2().dot(p.metric_weights(base)));
    if (n > 0) v /= n;
    return p.unflatten_like(base, v);
}

// Integrate dx/dtau = descent_rhs(x) with adaptive steps. A step is
// accepted only if J^2 does not increase by more than 1e-14 relative, so the
// recorded cost history is non-increasing by construction. Classification:
//   InvariantSolution      J < tol_solution
//   GhostCandidate         |grad| < tol_grad (1 + J), J >= tol_solution
//   Stalled                plateau, tau_max, or dtau underflow
//   Diverged               non-finite state or cost
//   CollapsedToEquilibrium loop arclength shrank below collapse_ratio
template <GradientFlowProblem P>
DescentResult<typename P::State> integrate_descent(const P& prob, const typename P::State& x0,
                                                   const DescentConfig& cfg = {}) {
    cfg.validate();
    using State = typename P::State;
    DescentResult<State> res;
    res.final_state = x0;

    State x = x0;
    if (!prob.is_finite(x)) {
        res.classification = Classification::Diverged;
        res.diagnostic = "non-finite initial state";
        res.final_cost = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    double J2 = prob.cost(x);
    if (!std::isfinite(J2)) {
        res.classification = Classification::Diverged;
        res.diagnostic = "non-finite initial cost";
        res.final_cost = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    State g = prob.descent_rhs(x);
    double gn = metric_norm(prob, x, g);
    double tau = 0.0;
    double h = cfg.dtau_init;

    double degen0 = 1.0;
    if constexpr (HasDegeneracy<P>) degen0 = prob.degeneracy(x);

    std::deque<double> window;
    auto record = [&](bool force = false) {
        if (force || res.accepted_steps % cfg.history_stride == 0)
            res.cost_history.push_back({tau, std::sqrt(std::max(J2, 0.0)), gn, h});
    };
    auto finish = [&](Classification cls, const std::string& why) {
        res.final_state = x;
        res.final_cost = std::sqrt(std::max(J2, 0.0));
        res.grad_norm = gn;
        res.tau_end = tau;
        res.classification = cls;
        res.diagnostic = why;
        if (res.cost_history.empty() || res.cost_history.back().tau != tau) record(true);
        return res;
    };
    auto classify_now = [&]() -> std::optional<Classification> {
        const double J = std::sqrt(std::max(J2, 0.0));
        if constexpr (HasDegeneracy<P>) {
            if (degen0 > 0 && prob.degeneracy(x) < cfg.collapse_ratio * degen0)
                return Classification::CollapsedToEquilibrium;
        }
        if (J < cfg.tol_solution) return Classification::InvariantSolution;
        if (gn < cfg.tol_grad * (1.0 + J)) return Classification::GhostCandidate;
        return std::nullopt;
    };

    record(true);
    if (auto cls = classify_now()) return finish(*cls, "converged at initial state");

    const double grow = 1.0 + 0.5 * (1.0 - cfg.safety);
    Vector g_flat = prob.flatten(g);
    const Vector mw = prob.metric_weights(x);
    while (true) {
        if (tau >= cfg.tau_max) return finish(Classification::Stalled, "tau_max reached");
        if (res.accepted_steps >= cfg.max_steps)
            return finish(Classification::Stalled, "step budget exhausted");

        std::optional<State> trial;
        if constexpr (HasAdvance<P>)
            trial = prob.advance(x, g, h);
        else
            trial = prob.apply_step(x, g, h);

        double J2t = std::numeric_limits<double>::infinity();
        if (trial && prob.is_finite(*trial)) J2t = prob.cost(*trial);

        if (std::isfinite(J2t) && J2t <= J2 * (1.0 + 1e-14)) {
            x = std::move(*trial);
            J2 = J2t;
            tau += h;
            ++res.accepted_steps;
            g = prob.descent_rhs(x);
            gn = metric_norm(prob, x, g);
            record();
            // Gradient reversal marks an overshoot across the valley floor:
            // shrink the step instead of growing it, which keeps explicit
            // steps inside the contraction zone instead of thrashing at the
            // stability edge.
            Vector g_flat_new = prob.flatten(g);
            const double along = g_flat_new.cwiseProduct(mw).dot(g_flat);
            g_flat = std::move(g_flat_new);
            if (along < 0.0)
                h = std::max(h * 0.5, cfg.dtau_min);
            else
                h = std::min(h * grow, cfg.dtau_max);

            if (auto cls = classify_now()) return finish(*cls, "");

            window.push_back(J2);
            if (int(window.size()) > cfg.stall_window) {
                const double past = window.front();
                window.pop_front();
                const double drop = (past - J2) / std::max(past, 1e-300);
                if (drop < cfg.stall_rel_drop)
                    return finish(Classification::Stalled, "cost plateau without small gradient");
            }
        } else {
            ++res.rejected_steps;
            h *= cfg.safety;
            if (h < cfg.dtau_min)
                return finish(Classification::Stalled, "dtau underflow");
        }
    }
}

// ---------------------------------------------------------------------------
// Stationary-point classification

enum class StationaryType { Minimum, NotMinimum };

struct StationaryReport {
    StationaryType type = StationaryType::NotMinimum;
    double min_curvature = 0.0;   // smallest Hessian eigenvalue estimate of J^2
    int returned = 0;             // perturbations pulled back to the point
    int escaped = 0;              // perturbations that left or undercut J
    bool diverged = false;
};

namespace detail {

// One brief monitored descent from a perturbed point. Returns +1 if the
// perturbation came back within scale/10, -1 if it escaped (J fell below the
// stationary value or the state left a 10*scale ball), 0 if undecided.
template <GradientFlowProblem P>
int probe_direction(const P& prob, const typename P::State& point, double j2_point,
                    const typename P::State& start, double scale, long budget) {
    using State = typename P::State;
    State x = start;
    double J2 = prob.cost(x);
    if (!std::isfinite(J2)) return -1;
    const double undercut = j2_point - std::max(1e-10 * std::abs(j2_point), 1e-300);
    double h = scale * 1e-2;
    long rejects = 0;
    for (long it = 0; it < budget; ++it) {
        const double dist = state_distance(prob, x, point);
        if (dist <= scale / 10.0) return +1;
        if (dist > 10.0 * scale) return -1;
        if (J2 < undercut) return -1;
        State g = prob.descent_rhs(x);
        std::optional<State> trial;
        if constexpr (HasAdvance<P>)
            trial = prob.advance(x, g, h);
        else
            trial = prob.apply_step(x, g, h);
        double J2t = std::numeric_limits<double>::infinity();
        if (trial && prob.is_finite(*trial)) J2t = prob.cost(*trial);
        if (std::isfinite(J2t) && J2t <= J2 * (1.0 + 1e-14)) {
            x = std::move(*trial);
            J2 = J2t;
            h *= 1.3;
        } else {
            h *= 0.5;
            if (++rejects > 200 || h < 1e-300) break;
        }
    }
    // Undecided at budget end: require the probe to have stayed near without
    // undercutting the stationary cost.
    const double dist = state_distance(prob, x, point);
    return (dist <= scale && J2 >= undercut) ? +1 : -1;
}

// Smallest eigenvalue of the cost Hessian by finite-difference power
// iteration (shifted), in the flat metric coordinates.
template <GradientFlowProblem P>
double smallest_curvature(const P& prob, const typename P::State& point, double scale,
                          std::mt19937_64& rng) {
    const Vector w = prob.metric_weights(point);
    const Eigen::Index n = w.size();
    const double eps = std::max(1e-7, 1e-3 * scale);

    auto hessian_apply = [&](const Vector& v) -> Vector {
        typename P::State dir = prob.unflatten_like(point, v);
        auto xp = prob.apply_step(point, dir, eps);
        auto xm = prob.apply_step(point, dir, -eps);
        if (!xp || !xm) return Vector::Zero(n);
        Vector gp = prob.flatten(prob.descent_rhs(*xp));
        Vector gm = prob.flatten(prob.descent_rhs(*xm));
        return (gm - gp) / (2.0 * eps);  // rhs = -grad, so H v = (g(-) - g(+)) / 2eps
    };
    auto mdot = [&](const Vector& a, const Vector& b) { return a.cwiseProduct(w).dot(b); };

    std::normal_distribution<double> gauss;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    v /= std::sqrt(mdot(v, v));

    double lam_max = 0.0;
    for (int it = 0; it < 40; ++it) {
        Vector hv = hessian_apply(v);
        lam_max = mdot(v, hv);
        const double nn = std::sqrt(mdot(hv, hv));
        if (nn < 1e-300) break;
        v = hv / nn;
    }
    const double shift = std::abs(lam_max) * 1.05 + 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    v /= std::sqrt(mdot(v, v));
    double mu = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vector bv = shift * v - hessian_apply(v);
        mu = mdot(v, bv);
        const double nn = std::sqrt(mdot(bv, bv));
        if (nn < 1e-300) break;
        v = bv / nn;
    }
    return shift - mu;
}

}  // namespace detail

// Perturb a stationary point along k random unit directions at the given
// amplitude and re-descend briefly; Minimum when every perturbation returns.
// Also reports a finite-difference estimate of the smallest curvature
// eigenvalue of J^2 at the point.
template <GradientFlowProblem P>
StationaryReport classify_stationary(const P& prob, const typename P::State& point, double scale,
                                     int k_directions = 8, std::uint64_t seed = 0x9e3779b9,
                                     long probe_budget = 3000) {
    StationaryReport rep;
    std::mt19937_64 rng(seed);
    const double j2_point = prob.cost(point);
    for (int k = 0; k < k_directions; ++k) {
        auto dir = random_tangent(prob, point, rng);
        auto start = prob.apply_step(point, dir, scale);
        if (!start) continue;
        const int verdict = detail::probe_direction(prob, point, j2_point, *start, scale,
                                                    probe_budget);
        if (verdict > 0)
            ++rep.returned;
        else
            ++rep.escaped;
    }
    rep.min_curvature = detail::smallest_curvature(prob, point, scale, rng);
    rep.type = (rep.escaped == 0 && rep.returned > 0) ? StationaryType::Minimum
                                                      : StationaryType::NotMinimum;
    return rep;
}

// ---------------------------------------------------------------------------
// Pointwise descent problems

// Equilibria of a continuous-time system: J^2 = (1/2)<f,f>. Uses an
// integrating-factor step when the system declares a diagonal linear symbol
// (the descent flow then has the stiff diagonal part -lambda^2).
class EquilibriumProblem {
  public:
    using State = Vector;

    explicit EquilibriumProblem(SystemDefinition sys) : sys_(std::move(sys)) {
        if (sys_.kind != SystemKind::ContinuousTime)
            throw std::invalid_argument("EquilibriumProblem: continuous-time systems only");
    }

    const SystemDefinition& system() const { return sys_; }

    double cost(const Vector& u) const {
        Vector f = sys_.rhs(u);
        return 0.5 * weighted_dot(f, f, sys_.quad_weights);
    }

    Vector descent_rhs(const Vector& u) const { return -sys_.jtv(u, sys_.rhs(u)); }

    std::optional<Vector> apply_step(const Vector& x, const Vector& g, double h) const {
        return x + h * g;
    }

    std::optional<Vector> advance(const Vector& x, const Vector& g, double h) const {
        if (sys_.linear_symbol.size() == 0) return x + h * g;
        Vector out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double sigma = -sys_.linear_symbol[i] * sys_.linear_symbol[i];
            const double z = h * sigma;
            const double nl = g[i] - sigma * x[i];
            out[i] = std::exp(z) * x[i] + h * phi1(z) * nl;
        }
        return out;
    }

    Vector flatten(const Vector& x) const { return x; }
    Vector unflatten_like(const Vector&, const Vector& v) const { return v; }
    Vector metric_weights(const Vector&) const {
        return sys_.quad_weights.size() ? sys_.quad_weights : Vector::Ones(sys_.dim);
    }
    bool is_finite(const Vector& x) const { return x.allFinite(); }

  private:
    SystemDefinition sys_;
};

// Fixed points of a scalar map: J^2 = (1/2)(f(x)-x)^2.
class MapFixedPointProblem {
  public:
    using State = Vector;  // length 1

    explicit MapFixedPointProblem(MapDefinition map) : map_(std::move(map)) {}

    const MapDefinition& map() const { return map_; }

    double cost(const Vector& x) const { return map_fixed_point_cost(map_, x[0]); }
    Vector descent_rhs(const Vector& x) const {
        Vector g(1);
        g[0] = -map_cost_gradient(map_, x[0]);
        return g;
    }
    std::optional<Vector> apply_step(const Vector& x, const Vector& g, double h) const {
        return x + h * g;
    }
    Vector flatten(const Vector& x) const { return x; }
    Vector unflatten_like(const Vector&, const Vector& v) const { return v; }
    Vector metric_weights(const Vector&) const { return Vector::Ones(1); }
    bool is_finite(const Vector& x) const { return x.allFinite(); }

  private:
    MapDefinition map_;
};

}  // namespace ghost
