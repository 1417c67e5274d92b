#pragma once

#include "ghost/core.hpp"
#include "ghost/loops.hpp"

#include <algorithm>
#include <vector>

namespace ghost {

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;

    void validate() const {
        if (times.size() != states.size())
            throw std::invalid_argument("Trajectory: times/states length mismatch");
        for (size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw std::invalid_argument("Trajectory: times not strictly increasing");
    }
};

namespace detail {

inline Vector rk4_step(const SystemDefinition& sys, const Vector& u, double dt) {
    Vector k1 = sys.rhs(u);
    Vector k2 = sys.rhs(u + 0.5 * dt * k1);
    Vector k3 = sys.rhs(u + 0.5 * dt * k2);
    Vector k4 = sys.rhs(u + dt * k3);
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

inline Vector time_step(const SystemDefinition& sys, const Vector& u, double dt) {
    if (sys.kind == SystemKind::DiscreteTime) return sys.rhs(u);
    if (sys.time_step) return sys.time_step(u, dt);
    return detail::rk4_step(sys, u, dt);
}

// Forward simulation at fixed step size; states stored every store_stride
// steps. Maps advance one iteration per unit time and ignore dt.
inline Trajectory simulate(const SystemDefinition& sys, const Vector& u0, double t_end, double dt,
                           int store_stride = 1) {
    check_dim(sys, u0, "simulate");
    Trajectory traj;
    Vector u = u0;
    double t = 0.0;
    const bool discrete = sys.kind == SystemKind::DiscreteTime;
    if (discrete) dt = 1.0;
    const long nsteps = long(std::ceil(t_end / dt - 1e-12));
    traj.times.reserve(size_t(nsteps / store_stride) + 2);
    traj.states.reserve(size_t(nsteps / store_stride) + 2);
    traj.times.push_back(0.0);
    traj.states.push_back(u);
    for (long i = 0; i < nsteps; ++i) {
        u = time_step(sys, u, dt);
        t = dt * double(i + 1);
        if (!u.allFinite() || u.norm() > 1e6)
            throw std::runtime_error("simulate: blow-up at t = " + std::to_string(t));
        if ((i + 1) % store_stride == 0 || i + 1 == nsteps) {
            traj.times.push_back(t);
            traj.states.push_back(u);
        }
    }
    return traj;
}

// First time |x| exceeds the threshold (linearly interpolated within the
// step); throws if no exit happens before t_max.
inline double transition_time(const SystemDefinition& sys, const Vector& u0, double threshold,
                              double dt, double t_max) {
    check_dim(sys, u0, "transition_time");
    Vector u = u0;
    double t = 0.0;
    double prev = std::abs(u[0]);
    while (t < t_max) {
        Vector un = time_step(sys, u, dt);
        const double cur = std::abs(un[0]);
        if (cur >= threshold) {
            const double w = (threshold - prev) / std::max(cur - prev, 1e-300);
            return t + dt * std::clamp(w, 0.0, 1.0);
        }
        u = std::move(un);
        prev = cur;
        t += dt;
    }
    throw std::runtime_error("transition_time: no exit before t_max");
}

struct Histogram {
    Vector edges;  // bins + 1 ascending edges
    Vector mass;   // normalized to sum 1 over occupied bins

    int bins() const { return int(mass.size()); }
    double bin_width() const { return (edges[edges.size() - 1] - edges[0]) / mass.size(); }
    int modal_bin() const {
        int arg = 0;
        mass.maxCoeff(&arg);
        return arg;
    }
    int bin_of(double x) const {
        if (x < edges[0]) return 0;
        const int b = int((x - edges[0]) / bin_width());
        return std::clamp(b, 0, bins() - 1);
    }
    double center(int b) const { return 0.5 * (edges[b] + edges[b + 1]); }
};

// Normalized histogram of a scalar sample sequence after discarding
// burn_in entries. Range: 1st..99th percentile padded by 10%.
inline Histogram empirical_pdf(const std::vector<double>& samples, int bins = 512,
                               long burn_in = 0) {
    if (long(samples.size()) <= burn_in)
        throw std::invalid_argument("empirical_pdf: empty after burn-in");
    std::vector<double> data(samples.begin() + burn_in, samples.end());
    std::vector<double> sorted = data;
    std::sort(sorted.begin(), sorted.end());
    const auto pct = [&](double p) {
        const double idx = p * double(sorted.size() - 1);
        const size_t lo = size_t(idx);
        const size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (idx - double(lo)) * (sorted[hi] - sorted[lo]);
    };
    double lo = pct(0.01), hi = pct(0.99);
    double pad = 0.1 * (hi - lo);
    if (pad <= 0) pad = std::max(1e-9, 1e-9 * std::abs(lo));
    lo -= pad;
    hi += pad;

    Histogram h;
    h.edges = Vector::LinSpaced(bins + 1, lo, hi);
    h.mass = Vector::Zero(bins);
    const double width = (hi - lo) / bins;
    long counted = 0;
    for (double x : data) {
        if (x < lo || x >= hi) continue;
        const int b = std::clamp(int((x - lo) / width), 0, bins - 1);
        h.mass[b] += 1.0;
        ++counted;
    }
    if (counted > 0) h.mass /= double(counted);
    return h;
}

struct RecurrenceCandidate {
    double t0;
    double T_guess;
    double gap;
};

// Local minima of ||u(t + T) - u(t)|| over the scanned (t, T) grid with gap
// below tol, sorted by gap. Works on the trajectory's stored samples.
inline std::vector<RecurrenceCandidate> recurrence_scan(const Trajectory& traj,
                                                        const Vector& quad_weights, double T_min,
                                                        double T_max, double tol) {
    traj.validate();
    const size_t n = traj.times.size();
    if (n < 3) return {};
    const double dt = traj.times[1] - traj.times[0];
    const long k_min = std::max(1L, long(std::floor(T_min / dt)));
    const long k_max = long(std::ceil(T_max / dt));
    if (k_max <= k_min || size_t(k_max) >= n) return {};

    const long nt = long(n) - k_max;
    if (nt <= 0) return {};
    Matrix gap(nt, k_max - k_min + 1);
    for (long i = 0; i < nt; ++i)
        for (long k = k_min; k <= k_max; ++k)
            gap(i, k - k_min) = weighted_norm(traj.states[i + k] - traj.states[i], quad_weights);

    std::vector<RecurrenceCandidate> out;
    for (long i = 0; i < nt; ++i) {
        for (long j = 0; j < gap.cols(); ++j) {
            const double g = gap(i, j);
            if (g >= tol) continue;
            bool is_min = true;
            for (long di = -1; di <= 1 && is_min; ++di)
                for (long dj = -1; dj <= 1 && is_min; ++dj) {
                    if (!di && !dj) continue;
                    const long ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= gap.rows() || jj < 0 || jj >= gap.cols()) continue;
                    if (gap(ii, jj) < g) is_min = false;
                }
            if (is_min)
                out.push_back({traj.times[i], dt * double(j + k_min), g});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.gap < b.gap; });
    return out;
}

// Weighted L2 distance between states.
inline double distance_to(const StateVector& a, const StateVector& b) {
    StateVector d = a;
    d.coords = a.coords - b.coords;
    return norm(d);
}

// Distance from a state to a loop: minimum over the loop samples.
inline double distance_to(const StateVector& state, const Loop& loop) {
    if (state.dim() != loop.dim())
        throw std::invalid_argument("distance_to: dimension mismatch");
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < loop.ns(); ++j) {
        Vector d = state.coords - loop.samples.row(j).transpose();
        best = std::min(best, weighted_dot(d, d, state.weights));
    }
    return std::sqrt(best);
}

// Convenience overload used by trajectory post-processing.
inline double distance_to(const Vector& coords, const Loop& loop, const Vector& quad_weights) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < loop.ns(); ++j) {
        Vector d = coords - loop.samples.row(j).transpose();
        best = std::min(best, weighted_dot(d, d, quad_weights));
    }
    return std::sqrt(best);
}

// Build a loop guess from a trajectory segment (see loop_from_timeseries).
inline Loop loop_from_trajectory(const Trajectory& traj, double t0, double T_guess, int ns) {
    return loop_from_timeseries(traj.times, traj.states, t0, T_guess, ns);
}

}  // namespace ghost
