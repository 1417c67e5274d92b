#pragma once

#include "ghost/core.hpp"

#include <Eigen/Cholesky>

#include <memory>

namespace ghost {

// Structural system M U'' + D U' + F_int(U) = F_ext(load) in mass/damping/
// internal-force form. M must be symmetric positive-definite; the tangent
// stiffness K(U) = dF_int/dU drives both the descent gradient and the
// implicit Newmark iterations.
struct SecondOrderSystem {
    Eigen::Index n_dof = 0;
    Matrix M;
    Matrix D;
    std::function<Vector(const Vector&)> f_int;
    std::function<Matrix(const Vector&)> stiffness;
    std::function<Vector(double)> f_ext;
    double load = 0.0;

    std::shared_ptr<Eigen::LLT<Matrix>> mass_llt;

    void factorize() {
        if (M.rows() != n_dof || M.cols() != n_dof)
            throw std::invalid_argument("SecondOrderSystem: bad mass matrix shape");
        if (!M.isApprox(M.transpose(), 1e-12))
            throw std::invalid_argument("SecondOrderSystem: mass matrix not symmetric");
        mass_llt = std::make_shared<Eigen::LLT<Matrix>>(M);
        if (mass_llt->info() != Eigen::Success)
            throw std::invalid_argument("SecondOrderSystem: mass matrix not positive-definite");
    }

    Vector solve_mass(const Vector& b) const {
        if (!mass_llt) throw std::runtime_error("SecondOrderSystem: call factorize() first");
        return mass_llt->solve(b);
    }

    Vector external_force() const { return f_ext(load); }
};

struct MechState {
    Vector U;
    Vector V;
};

// U' = V, V' = M^{-1}(F_ext - F_int(U) - D V).
inline std::pair<Vector, Vector> mech_rates(const SecondOrderSystem& sys, const MechState& s) {
    if (s.U.size() != sys.n_dof || s.V.size() != sys.n_dof)
        throw std::invalid_argument("mech_rates: state size mismatch");
    Vector vdot = sys.solve_mass(sys.external_force() - sys.f_int(s.U) - sys.D * s.V);
    return {s.V, std::move(vdot)};
}

// J^2 = (1/2)(U'^T U' + V'^T V'); zero exactly at equilibria.
inline double mech_cost(const SecondOrderSystem& sys, const MechState& s) {
    auto [udot, vdot] = mech_rates(sys, s);
    return 0.5 * (udot.squaredNorm() + vdot.squaredNorm());
}

// Negative gradient of mech_cost:
//   dU/dtau = K(U)^T M^{-T} V',   dV/dtau = -V + D^T M^{-T} V'.
// Reduces to the mu V' form when M, K are symmetric and D = mu M.
inline std::pair<Vector, Vector> mech_descent_rhs(const SecondOrderSystem& sys,
                                                  const MechState& s) {
    auto [udot, vdot] = mech_rates(sys, s);
    Vector minv_t_vdot = sys.solve_mass(vdot);  // M symmetric: M^{-T} = M^{-1}
    Vector du = sys.stiffness(s.U).transpose() * minv_t_vdot;
    Vector dv = -s.V + sys.D.transpose() * minv_t_vdot;
    return {std::move(du), std::move(dv)};
}

// One implicit Newmark-beta step (average acceleration at the defaults),
// Newton-iterated on the end-of-step displacement with the tangent
// stiffness. Throws if Newton does not reach residual 1e-10 in 25 steps.
inline MechState newmark_step(const SecondOrderSystem& sys, const MechState& s, double dt,
                              double beta = 0.25, double gamma = 0.5) {
    const Vector fext = sys.external_force();
    Vector a0 = sys.solve_mass(fext - sys.f_int(s.U) - sys.D * s.V);

    Vector u = s.U + dt * s.V + dt * dt * (0.5 - beta) * a0;  // predictor with A+ = 0
    auto accel = [&](const Vector& up) {
        return (up - s.U - dt * s.V - dt * dt * (0.5 - beta) * a0) / (beta * dt * dt);
    };
    auto veloc = [&](const Vector& ap) { return s.V + dt * ((1.0 - gamma) * a0 + gamma * ap); };

    bool converged = false;
    for (int it = 0; it < 25; ++it) {
        Vector ap = accel(u);
        Vector vp = veloc(ap);
        Vector r = sys.M * ap + sys.D * vp + sys.f_int(u) - fext;
        if (r.norm() < 1e-10) {
            converged = true;
            break;
        }
        Matrix jac = sys.M / (beta * dt * dt) + sys.D * (gamma / (beta * dt)) + sys.stiffness(u);
        u -= jac.partialPivLu().solve(r);
    }
    if (!converged) throw std::runtime_error("newmark_step: Newton did not converge");
    Vector ap = accel(u);
    return {u, veloc(ap)};
}

// Shallow two-bar (von Mises) truss: supports at (-a, 0) and (a, 0), apex
// mass at (0, h) in the unloaded state, vertical load pulling the apex
// down. Two dofs (apex displacement), closed-form internal force and
// tangent stiffness, and an analytic equilibrium path for oracles.
struct TrussGeometry {
    double half_span = 1.0;   // a
    double rise = 0.3;        // h
    double stiffness = 100.0; // bar stiffness k
    double mass = 1.0;        // apex mass
    double damping = 1.0;     // coefficient c in D = c I
};

inline SecondOrderSystem von_mises_truss(const TrussGeometry& geo, double load = 0.0) {
    if (geo.rise == 0.0) throw std::invalid_argument("von_mises_truss: degenerate geometry h=0");
    const double a = geo.half_span, h = geo.rise, k = geo.stiffness;
    const double L0 = std::sqrt(a * a + h * h);

    SecondOrderSystem sys;
    sys.n_dof = 2;
    sys.M = geo.mass * Matrix::Identity(2, 2);
    sys.D = geo.damping * Matrix::Identity(2, 2);
    sys.load = load;
    sys.f_ext = [](double lambda) {
        Vector f(2);
        f << 0.0, -lambda;
        return f;
    };
    sys.f_int = [a, h, k, L0](const Vector& U) {
        const Eigen::Vector2d p(U[0], h + U[1]);
        Vector f = Vector::Zero(2);
        for (double sx : {-a, a}) {
            const Eigen::Vector2d d = p - Eigen::Vector2d(sx, 0.0);
            const double len = d.norm();
            f += k * (len - L0) / len * d;
        }
        return f;
    };
    sys.stiffness = [a, h, k, L0](const Vector& U) {
        const Eigen::Vector2d p(U[0], h + U[1]);
        Matrix K = Matrix::Zero(2, 2);
        for (double sx : {-a, a}) {
            const Eigen::Vector2d d = p - Eigen::Vector2d(sx, 0.0);
            const double len = d.norm();
            const Eigen::Matrix2d ee = d * d.transpose() / (len * len);
            K += k * ee + k * (len - L0) / len * (Eigen::Matrix2d::Identity() - ee);
        }
        return K;
    };
    sys.factorize();
    return sys;
}

// Load on the symmetric equilibrium path of the truss as a function of the
// apex height y (analytic oracle).
inline double truss_path_load(const TrussGeometry& geo, double y) {
    const double a = geo.half_span, k = geo.stiffness;
    const double L0 = std::sqrt(a * a + geo.rise * geo.rise);
    const double len = std::sqrt(a * a + y * y);
    return -2.0 * k * (len - L0) * y / len;
}

// Critical (fold) load of the truss from dP/dy = 0, located by bisection on
// the closed-form derivative; returns {load, apex height}.
inline std::pair<double, double> truss_fold_oracle(const TrussGeometry& geo) {
    const double a = geo.half_span, h = geo.rise;
    const double L0 = std::sqrt(a * a + h * h);
    auto dpdy = [&](double y) {
        const double len = std::sqrt(a * a + y * y);
        return -(1.0 - L0 / len + L0 * y * y / (len * len * len));
    };
    double lo = 1e-12, hi = h - 1e-12;
    if (dpdy(lo) <= 0 || dpdy(hi) >= 0)
        throw std::runtime_error("truss_fold_oracle: no snap-through for this geometry");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dpdy(mid) > 0 ? lo : hi) = mid;
    }
    const double y = 0.5 * (lo + hi);
    return {truss_path_load(geo, y), y};
}

// First-order view of the mechanical system as a generic continuous-time
// system on [U; V], for the descent engine and continuation machinery.
inline SystemDefinition make_mech_system(const SecondOrderSystem& mech, std::string name = "mech") {
    auto sysp = std::make_shared<SecondOrderSystem>(mech);
    if (!sysp->mass_llt) sysp->factorize();
    const Eigen::Index n = sysp->n_dof;
    SystemDefinition sys;
    sys.name = std::move(name);
    sys.dim = 2 * n;
    sys.params = {{"load", mech.load}};
    sys.kind = SystemKind::ContinuousTime;
    sys.rhs = [sysp, n](const Vector& x) {
        MechState s{x.head(n), x.tail(n)};
        auto [udot, vdot] = mech_rates(*sysp, s);
        Vector f(2 * n);
        f << udot, vdot;
        return f;
    };
    sys.jtv = [sysp, n](const Vector& x, const Vector& v) {
        Vector minv_v2 = sysp->solve_mass(v.tail(n));
        Vector out(2 * n);
        out.head(n) = -sysp->stiffness(x.head(n)).transpose() * minv_v2;
        out.tail(n) = v.head(n) - sysp->D.transpose() * minv_v2;
        return out;
    };
    return sys;
}

}  // namespace ghost
