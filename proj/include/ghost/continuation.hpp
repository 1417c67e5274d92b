#pragma once

#include "ghost/engine.hpp"

#include <optional>

namespace ghost {

enum class BranchKind { Solution, Ghost };

enum class BranchEndReason { RangeEnd, BranchLost, GhostTerminated, StepUnderflow, PointBudget };

inline const char* to_string(BranchKind k) {
    return k == BranchKind::Solution ? "solution" : "ghost";
}

template <class State>
struct BranchPoint {
    double param;
    State state;
    double cost;  // J
    Classification cls;
};

// Parameter-indexed family of stationary states. Natural-parameter
// continuation rides straight through folds (the descent corrector converges
// on both sides), so a branch may contain a solution leg and a ghost leg;
// the parameter values where the kind flips are recorded as folds.
template <class State>
struct Branch {
    std::vector<BranchPoint<State>> points;
    std::vector<double> folds;
    std::optional<double> terminated_at;
    BranchEndReason end_reason = BranchEndReason::RangeEnd;
    std::string note;

    BranchKind kind() const {
        if (points.empty()) return BranchKind::Solution;
        return points.back().cls == Classification::InvariantSolution ? BranchKind::Solution
                                                                      : BranchKind::Ghost;
    }
    bool has_kind(BranchKind k) const {
        for (const auto& p : points)
            if ((p.cls == Classification::InvariantSolution) == (k == BranchKind::Solution))
                return true;
        return false;
    }
};

// A problem family maps a parameter value to a descent problem; states keep
// the same shape across the family.
template <class F>
concept ProblemFamily = requires(const F& f, double p) {
    { f.make(p) };
};

struct ContinuationConfig {
    double dp_init = 1e-2;
    double dp_min = 1e-7;
    double dp_max = 0.5;
    double jump_tol = 0.5;  // relative corrector jump flagged as basin hop
    int max_points = 100000;
    int retry_limit = 60;
    DescentConfig descent;

    ContinuationConfig() {
        descent.max_steps = 2'000'000;
        descent.history_stride = 1 << 20;  // corrector histories are discarded
    }
};

// Continue a converged stationary state in the family parameter from p0
// toward p_end, secant-predicting the state and re-converging with the
// descent engine at each step. Parameter steps halve when the corrector
// jumps basins, fails, or needs too many iterations.
template <ProblemFamily F, class State>
Branch<State> continue_branch(const F& family, const State& start, double p0, double p_end,
                              const ContinuationConfig& cfg = {}) {
    using Problem = decltype(family.make(p0));
    Branch<State> branch;

    Problem prob0 = family.make(p0);
    auto res0 = integrate_descent(prob0, start, cfg.descent);
    if (res0.classification != Classification::InvariantSolution &&
        res0.classification != Classification::GhostCandidate)
        throw std::runtime_error(std::string("continue_branch: start state did not converge (") +
                                 to_string(res0.classification) + ")");
    branch.points.push_back({p0, res0.final_state, res0.final_cost, res0.classification});

    const double dir = p_end >= p0 ? 1.0 : -1.0;
    double dp = std::min(cfg.dp_init, cfg.dp_max) * dir;
    std::optional<std::pair<double, Vector>> prev;  // (param, flat state)
    double p_cur = p0;
    Vector cur_flat = prob0.flatten(res0.final_state);

    while (int(branch.points.size()) < cfg.max_points) {
        if (p_cur == p_end) break;
        double p_next = p_cur + dp;
        if ((p_next - p_end) * dir >= 0) p_next = p_end;

        Problem prob = family.make(p_next);
        Vector pred_flat = cur_flat;
        if (prev && prev->first != p_cur)
            pred_flat += (cur_flat - prev->second) * ((p_next - p_cur) / (p_cur - prev->first));
        State predicted = prob.unflatten_like(branch.points.back().state, pred_flat);

        bool ok = prob.is_finite(predicted);
        DescentResult<State> res;
        if (ok) {
            res = integrate_descent(prob, predicted, cfg.descent);
            ok = res.classification == Classification::InvariantSolution ||
                 res.classification == Classification::GhostCandidate;
        }
        if (ok) {
            const double jump = state_distance(prob, res.final_state, predicted);
            const double scale = 1.0 + std::sqrt(cur_flat.cwiseAbs2().dot(prob.metric_weights(
                                           branch.points.back().state)));
            if (jump > cfg.jump_tol * scale) ok = false;
        }

        if (!ok) {
            dp *= 0.5;
            if (std::abs(dp) < cfg.dp_min) {
                branch.end_reason = BranchEndReason::BranchLost;
                branch.note = "corrector lost the branch near p = " + std::to_string(p_next);
                break;
            }
            continue;
        }

        const auto prev_cls = branch.points.back().cls;
        if ((prev_cls == Classification::InvariantSolution) !=
            (res.classification == Classification::InvariantSolution))
            branch.folds.push_back(0.5 * (p_cur + p_next));

        prev = {{p_cur, cur_flat}};
        p_cur = p_next;
        cur_flat = prob.flatten(res.final_state);
        branch.points.push_back({p_next, res.final_state, res.final_cost, res.classification});

        if (std::abs(dp) < cfg.dp_max) dp = std::min(std::abs(dp) * 1.4, cfg.dp_max) * dir;
    }
    if (int(branch.points.size()) >= cfg.max_points)
        branch.end_reason = BranchEndReason::PointBudget;
    return branch;
}

struct FoldResult {
    double param;
    double bracket_lo;
    double bracket_hi;
    int iterations;
};

// Locate a fold by bisection on the solution-existence predicate: at each
// probe parameter the corrector is warm-started from the nearest converged
// side state; J < tol_solution marks the solution side. The bracket must
// have a solution on exactly one side.
template <ProblemFamily F, class State>
FoldResult detect_fold(const F& family, double p_a, double p_b, const State& seed,
                       const ContinuationConfig& cfg = {}, double rtol = 1e-6, double atol = 0.0) {
    auto classify_at = [&](double p, const State& s) {
        auto prob = family.make(p);
        auto res = integrate_descent(prob, s, cfg.descent);
        return res;
    };
    auto res_a = classify_at(p_a, seed);
    auto res_b = classify_at(p_b, res_a.final_state);
    const bool sol_a = res_a.classification == Classification::InvariantSolution;
    const bool sol_b = res_b.classification == Classification::InvariantSolution;
    if (sol_a == sol_b)
        throw std::invalid_argument("detect_fold: endpoints do not bracket a fold (" +
                                    std::string(to_string(res_a.classification)) + " / " +
                                    to_string(res_b.classification) + ")");

    State state_a = res_a.final_state;
    State state_b = res_b.final_state;
    int iters = 0;
    while (true) {
        const double width = std::abs(p_b - p_a);
        const double mid = 0.5 * (p_a + p_b);
        if (width <= std::max(atol, rtol * std::max({std::abs(p_a), std::abs(p_b), 1e-30})))
            return {mid, std::min(p_a, p_b), std::max(p_a, p_b), iters};
        ++iters;
        // warm start from the solution-side state, which deforms continuously
        auto res = classify_at(mid, sol_a ? state_a : state_b);
        const bool sol = res.classification == Classification::InvariantSolution;
        if (sol == sol_a) {
            p_a = mid;
            state_a = res.final_state;
        } else {
            p_b = mid;
            state_b = res.final_state;
        }
    }
}

struct GhostTerminationConfig {
    double scale = 1e-2;          // perturbation amplitude for classify_stationary
    int directions = 8;
    long probe_budget = 3000;
    double param_tol = 0.02;      // bisection width on the parameter
    std::uint64_t seed = 0x517cc1b7;
    ContinuationConfig continuation;
};

// First parameter value along a ghost branch at which the stationary point
// stops being a minimum; the branch is truncated and annotated. Returns
// nullopt when every ghost point classifies as a minimum.
template <ProblemFamily F, class State>
std::optional<double> ghost_termination(const F& family, Branch<State>& branch,
                                        const GhostTerminationConfig& cfg = {}) {
    auto is_minimum_at = [&](double p, const State& warm, State* out) {
        auto prob = family.make(p);
        auto res = integrate_descent(prob, warm, cfg.continuation.descent);
        if (res.classification != Classification::GhostCandidate &&
            res.classification != Classification::InvariantSolution)
            return false;
        const double jump = state_distance(prob, res.final_state, warm);
        Vector wf = prob.flatten(warm);
        const double scale = 1.0 + std::sqrt(wf.cwiseAbs2().dot(prob.metric_weights(warm)));
        if (jump > cfg.continuation.jump_tol * scale) return false;
        if (out) *out = res.final_state;
        auto rep = classify_stationary(prob, res.final_state, cfg.scale, cfg.directions, cfg.seed,
                                       cfg.probe_budget);
        return rep.type == StationaryType::Minimum;
    };

    size_t first_bad = branch.points.size();
    for (size_t i = 0; i < branch.points.size(); ++i) {
        const auto& pt = branch.points[i];
        if (pt.cls != Classification::GhostCandidate) continue;
        if (!is_minimum_at(pt.param, pt.state, nullptr)) {
            first_bad = i;
            break;
        }
    }
    if (first_bad == branch.points.size()) return std::nullopt;
    if (first_bad == 0) {
        branch.terminated_at = branch.points.front().param;
        branch.end_reason = BranchEndReason::GhostTerminated;
        return branch.terminated_at;
    }

    double p_good = branch.points[first_bad - 1].param;
    double p_bad = branch.points[first_bad].param;
    State warm = branch.points[first_bad - 1].state;
    while (std::abs(p_bad - p_good) > cfg.param_tol) {
        const double mid = 0.5 * (p_good + p_bad);
        State next = warm;
        if (is_minimum_at(mid, warm, &next)) {
            p_good = mid;
            warm = next;
        } else {
            p_bad = mid;
        }
    }
    const double term = 0.5 * (p_good + p_bad);
    while (!branch.points.empty() && branch.points.size() > first_bad) branch.points.pop_back();
    branch.terminated_at = term;
    branch.end_reason = BranchEndReason::GhostTerminated;
    return term;
}

}  // namespace ghost
