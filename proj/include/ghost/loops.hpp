#pragma once

#include "ghost/core.hpp"
#include "ghost/expint.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstdio>
#include <memory>
#include <numbers>
#include <optional>

namespace ghost {

// Closed curve in state space: samples u(s_j) at s_j = j/N_s on the rows,
// plus the period T that scales the tangent vectors. Optional per-component
// weights realize weighted residual costs (all 1 when empty).
struct Loop {
    Matrix samples;            // (N_s, dim)
    double T = 1.0;
    Vector component_weights;  // empty = uniform 1

    Eigen::Index ns() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
    bool is_finite() const { return samples.allFinite() && std::isfinite(T); }
};

inline void validate_loop(const Loop& loop) {
    if (loop.ns() < 8 || loop.ns() % 2)
        throw std::invalid_argument("Loop: N_s must be even and >= 8");
    if (!(loop.T > 0))
        throw std::invalid_argument("Loop: period must be positive");
    if (!loop.is_finite())
        throw std::invalid_argument("Loop: non-finite samples");
}

struct LoopResidual {
    Matrix values;  // (N_s, dim)
};

// Real FFTs along the s direction for (N_s x n) sample matrices, one plan
// pair per shape. Instances own scratch buffers; do not share one instance
// across threads.
class FourierS {
  public:
    FourierS(int ns, int ncols) : ns_(ns), ncols_(ncols), nc_(ns / 2 + 1) {
        real_ = fftw_alloc_real(size_t(ns_) * ncols_);
        comp_ = fftw_alloc_complex(size_t(nc_) * ncols_);
        int n[] = {ns_};
        fwd_ = fftw_plan_many_dft_r2c(1, n, ncols_, real_, nullptr, 1, ns_, comp_, nullptr, 1,
                                      nc_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_many_dft_c2r(1, n, ncols_, comp_, nullptr, 1, nc_, real_, nullptr, 1,
                                      ns_, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("FourierS: FFTW plan creation failed");
    }
    FourierS(const FourierS&) = delete;
    FourierS& operator=(const FourierS&) = delete;
    ~FourierS() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(comp_);
    }

    int ns() const { return ns_; }
    int ncols() const { return ncols_; }

    void forward(const Matrix& u, Eigen::MatrixXcd& out) const {
        std::copy(u.data(), u.data() + u.size(), real_);
        fftw_execute_dft_r2c(fwd_, real_, comp_);
        out.resize(nc_, ncols_);
        auto* c = reinterpret_cast<std::complex<double>*>(comp_);
        std::copy(c, c + size_t(nc_) * ncols_, out.data());
    }

    // Inverse of forward including the 1/N_s normalization.
    void backward(const Eigen::MatrixXcd& uhat, Matrix& out) const {
        auto* c = reinterpret_cast<std::complex<double>*>(comp_);
        std::copy(uhat.data(), uhat.data() + uhat.size(), c);
        fftw_execute_dft_c2r(bwd_, comp_, real_);
        out.resize(ns_, ncols_);
        std::copy(real_, real_ + size_t(ns_) * ncols_, out.data());
        out *= 1.0 / ns_;
    }

    // Spectral d/ds for unit-periodic samples; Nyquist mode dropped.
    Matrix derivative(const Matrix& u) const {
        Eigen::MatrixXcd uhat;
        forward(u, uhat);
        const std::complex<double> i2pi(0.0, 2.0 * std::numbers::pi);
        for (int m = 0; m < nc_; ++m) {
            if (2 * m == ns_)
                uhat.row(m).setZero();
            else
                uhat.row(m) *= i2pi * double(m);
        }
        Matrix out;
        backward(uhat, out);
        return out;
    }

  private:
    int ns_, ncols_, nc_;
    double* real_;
    fftw_complex* comp_;
    fftw_plan fwd_, bwd_;
};

namespace detail {

inline std::shared_ptr<FourierS> loop_workspace(const Loop& loop) {
    return std::make_shared<FourierS>(int(loop.ns()), int(loop.dim()));
}

inline Matrix apply_rows(const SystemDefinition& sys,
                         const std::function<Vector(const Vector&)>& op, const Matrix& A) {
    Matrix out(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.rows(); ++j) out.row(j) = op(A.row(j)).transpose();
    return out;
}

inline Matrix rhs_rows(const SystemDefinition& sys, const Matrix& A) {
    if (sys.rhs_batch) return sys.rhs_batch(A);
    return apply_rows(sys, sys.rhs, A);
}

inline Matrix jtv_rows(const SystemDefinition& sys, const Matrix& A, const Matrix& R) {
    if (sys.jtv_batch) return sys.jtv_batch(A, R);
    Matrix out(A.rows(), A.cols());
    for (Eigen::Index j = 0; j < A.rows(); ++j)
        out.row(j) = sys.jtv(A.row(j), R.row(j)).transpose();
    return out;
}

inline Matrix residual_impl(const SystemDefinition& sys, const Loop& loop, const FourierS& ws) {
    return ws.derivative(loop.samples) / loop.T - rhs_rows(sys, loop.samples);
}

inline double cost_impl(const SystemDefinition& sys, const Loop& loop, const Matrix& resid) {
    Matrix r2 = resid.cwiseAbs2();
    if (loop.component_weights.size()) r2 = r2 * loop.component_weights.asDiagonal();
    if (sys.quad_weights.size()) r2 = r2 * sys.quad_weights.asDiagonal();
    return 0.5 * r2.sum() / double(loop.ns());
}

struct LoopTangent {
    Matrix field;
    double dT;
};

inline LoopTangent descent_rhs_impl(const SystemDefinition& sys, const Loop& loop,
                                    const FourierS& ws) {
    Matrix us = ws.derivative(loop.samples);
    Matrix r = us / loop.T - rhs_rows(sys, loop.samples);
    if (loop.component_weights.size()) r = r * loop.component_weights.asDiagonal();
    Matrix field = ws.derivative(r) / loop.T + jtv_rows(sys, loop.samples, r);
    Matrix usr = us.cwiseProduct(r);
    if (sys.quad_weights.size()) usr = usr * sys.quad_weights.asDiagonal();
    const double dT = usr.sum() / (double(loop.ns()) * loop.T * loop.T);
    return {std::move(field), dT};
}

}  // namespace detail

// Spectral derivative of the loop with respect to s.
inline Matrix s_derivative(const Loop& loop) {
    validate_loop(loop);
    FourierS ws(int(loop.ns()), int(loop.dim()));
    return ws.derivative(loop.samples);
}

// r(s_j) = (1/T) du/ds(s_j) - f(u(s_j)).
inline LoopResidual loop_residual(const SystemDefinition& sys, const Loop& loop) {
    validate_loop(loop);
    if (loop.dim() != sys.dim)
        throw std::invalid_argument("loop_residual: dimension mismatch");
    FourierS ws(int(loop.ns()), int(loop.dim()));
    return {detail::residual_impl(sys, loop, ws)};
}

// J^2 = (1/2)(1/N_s) sum_j <r(s_j), r(s_j)> with component and quadrature
// weights folded into the norm.
inline double loop_cost(const SystemDefinition& sys, const Loop& loop) {
    validate_loop(loop);
    FourierS ws(int(loop.ns()), int(loop.dim()));
    return detail::cost_impl(sys, loop, detail::residual_impl(sys, loop, ws));
}

// Negative gradient of loop_cost with respect to (u, T) under the loop
// metric (1/N_s) sum_j <.,.>_quad + dT^2. Returned as (field, dT/dtau).
inline std::pair<Matrix, double> loop_descent_rhs(const SystemDefinition& sys, const Loop& loop) {
    validate_loop(loop);
    FourierS ws(int(loop.ns()), int(loop.dim()));
    auto t = detail::descent_rhs_impl(sys, loop, ws);
    return {std::move(t.field), t.dT};
}

// Resample a trajectory segment [t0, t0 + T_guess] onto N_s uniform points
// in s, closing the recurrence gap by linear blending over the final 10%.
inline Loop loop_from_timeseries(const std::vector<double>& times,
                                 const std::vector<Vector>& states, double t0, double T_guess,
                                 int ns) {
    if (times.size() != states.size() || times.size() < 2)
        throw std::invalid_argument("loop_from_timeseries: bad trajectory");
    if (t0 < times.front() || t0 + T_guess > times.back())
        throw std::invalid_argument("loop_from_timeseries: trajectory too short");
    if (ns < 8 || ns % 2) throw std::invalid_argument("loop_from_timeseries: bad N_s");
    const Eigen::Index dim = states.front().size();

    auto sample_at = [&](double t) -> Vector {
        auto it = std::lower_bound(times.begin(), times.end(), t);
        size_t hi = size_t(it - times.begin());
        if (hi == 0) hi = 1;
        if (hi >= times.size()) hi = times.size() - 1;
        const size_t lo = hi - 1;
        const double span = times[hi] - times[lo];
        const double w = span > 0 ? (t - times[lo]) / span : 0.0;
        return (1.0 - w) * states[lo] + w * states[hi];
    };

    Loop loop;
    loop.samples.resize(ns, dim);
    loop.T = T_guess;
    for (int j = 0; j < ns; ++j)
        loop.samples.row(j) = sample_at(t0 + T_guess * double(j) / ns).transpose();
    Vector gap = sample_at(t0 + T_guess) - sample_at(t0);
    for (int j = 0; j < ns; ++j) {
        const double s = double(j) / ns;
        if (s >= 0.9) loop.samples.row(j) -= ((s - 0.9) / 0.1) * gap.transpose();
    }
    return loop;
}

// Circular shift in s (utility for invariance checks and seeding).
inline Loop rotate_loop(const Loop& loop, Eigen::Index shift) {
    Loop out = loop;
    const Eigen::Index ns = loop.ns();
    shift = ((shift % ns) + ns) % ns;
    for (Eigen::Index j = 0; j < ns; ++j) out.samples.row(j) = loop.samples.row((j + shift) % ns);
    return out;
}

namespace detail {

inline double arclength_impl(const Loop& loop, const Vector& quad_weights, const FourierS& ws) {
    Matrix us = ws.derivative(loop.samples);
    double total = 0.0;
    for (Eigen::Index j = 0; j < us.rows(); ++j)
        total += weighted_norm(us.row(j).transpose(), quad_weights);
    return total / double(loop.ns());
}

}  // namespace detail

// Mean s-arclength of the loop; collapse onto an equilibrium drives it to 0.
inline double loop_arclength(const Loop& loop, const Vector& quad_weights = {}) {
    FourierS ws(int(loop.ns()), int(loop.dim()));
    return detail::arclength_impl(loop, quad_weights, ws);
}

// Descent problem over loop space. The field part of the flow has the exact
// stiff diagonal piece (1/T^2) u_ss - lambda^2 u in (s-Fourier, state) basis
// when the system declares a diagonal linear symbol, so steps use an
// exponential (ETD1) update with the remainder explicit; the period uses an
// explicit update guarded by the period floor.
class LoopDescentProblem {
  public:
    using State = Loop;

    LoopDescentProblem(SystemDefinition sys, int ns, double period_floor = 1e-3)
        : sys_(std::move(sys)),
          ns_(ns),
          tmin_(period_floor),
          ws_(std::make_shared<FourierS>(ns, int(sys_.dim))) {
        if (ns < 8 || ns % 2) throw std::invalid_argument("LoopDescentProblem: bad N_s");
    }

    const SystemDefinition& system() const { return sys_; }
    int ns() const { return ns_; }

    double cost(const Loop& loop) const {
        check(loop);
        return detail::cost_impl(sys_, loop, detail::residual_impl(sys_, loop, *ws_));
    }

    Matrix residual(const Loop& loop) const {
        check(loop);
        return detail::residual_impl(sys_, loop, *ws_);
    }

    Loop descent_rhs(const Loop& loop) const {
        check(loop);
        auto t = detail::descent_rhs_impl(sys_, loop, *ws_);
        Loop g;
        g.samples = std::move(t.field);
        g.T = t.dT;
        g.component_weights = loop.component_weights;
        return g;
    }

    std::optional<Loop> apply_step(const Loop& x, const Loop& g, double h) const {
        Loop out;
        out.samples = x.samples + h * g.samples;
        out.T = x.T + h * g.T;
        out.component_weights = x.component_weights;
        if (out.T < tmin_) return std::nullopt;
        return out;
    }

    std::optional<Loop> advance(const Loop& x, const Loop& g, double h) const {
        const double Tn = x.T + h * g.T;
        if (Tn < tmin_) return std::nullopt;
        Eigen::MatrixXcd xhat, ghat;
        ws_->forward(x.samples, xhat);
        ws_->forward(g.samples, ghat);
        const double two_pi_over_T = 2.0 * std::numbers::pi / x.T;
        for (Eigen::Index c = 0; c < xhat.cols(); ++c) {
            const double lam = sys_.linear_symbol.size() ? sys_.linear_symbol[c] : 0.0;
            const double cw = x.component_weights.size() ? x.component_weights[c] : 1.0;
            for (Eigen::Index m = 0; m < xhat.rows(); ++m) {
                const double ks = two_pi_over_T * double(m);
                const double sigma = -cw * (ks * ks + lam * lam);
                const double z = h * sigma;
                const std::complex<double> nl = ghat(m, c) - sigma * xhat(m, c);
                xhat(m, c) = std::exp(z) * xhat(m, c) + h * phi1(z) * nl;
            }
        }
        Loop out;
        ws_->backward(xhat, out.samples);
        out.T = Tn;
        out.component_weights = x.component_weights;
        return out;
    }

    Vector flatten(const Loop& x) const {
        Vector v(x.samples.size() + 1);
        v.head(x.samples.size()) = Eigen::Map<const Vector>(x.samples.data(), x.samples.size());
        v[x.samples.size()] = x.T;
        return v;
    }

    Loop unflatten_like(const Loop& base, const Vector& v) const {
        Loop out;
        out.samples = Eigen::Map<const Matrix>(v.data(), base.ns(), base.dim());
        out.T = v[v.size() - 1];
        out.component_weights = base.component_weights;
        return out;
    }

    Vector metric_weights(const Loop& base) const {
        Vector w(base.samples.size() + 1);
        const double inv_ns = 1.0 / double(base.ns());
        for (Eigen::Index c = 0; c < base.dim(); ++c) {
            const double qw = sys_.quad_weights.size() ? sys_.quad_weights[c] : 1.0;
            w.segment(c * base.ns(), base.ns()).setConstant(qw * inv_ns);
        }
        w[base.samples.size()] = 1.0;
        return w;
    }

    double degeneracy(const Loop& x) const {
        return detail::arclength_impl(x, sys_.quad_weights, *ws_);
    }

    bool is_finite(const Loop& x) const { return x.is_finite(); }

  private:
    void check(const Loop& loop) const {
        if (loop.ns() != ns_ || loop.dim() != sys_.dim)
            throw std::invalid_argument("LoopDescentProblem: loop shape mismatch");
    }

    SystemDefinition sys_;
    int ns_;
    double tmin_;
    std::shared_ptr<FourierS> ws_;
};

}  // namespace ghost
