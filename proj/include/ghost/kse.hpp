#pragma once

#include "ghost/core.hpp"
#include "ghost/expint.hpp"

#include <memory>
#include <numbers>

namespace ghost {

// Pseudospectral machinery for the Kuramoto-Sivashinsky equation
//   u_t = -u u_x - u_xx - u_xxxx
// on a periodic domain of length L, restricted to the anti-symmetric
// subspace u(x) = -u(-x). States are sine-mode amplitudes a_k, k = 1..K,
// u(x) = sum_k a_k sin(2 pi k x / L); the basis enforces the symmetry
// exactly. Products are evaluated on the interior half-grid x_j = j L / Nx,
// j = 1..Nx/2-1 (an odd function is determined by these values), with
// Nx >= 3K so the quadratic nonlinearity is fully dealiased.
//
// The adjoint is the exact Euclidean transpose of the discrete Jacobian,
// which coincides with the L2 adjoint u r_x - r_xx - r_xxxx because the
// mode weights L/2 are uniform.
class KseSpectral {
  public:
    KseSpectral(double L, int K, int Nx) : L_(L), K_(K), Nx_(Nx) {
        if (L <= 0) throw std::invalid_argument("KseSpectral: L must be positive");
        if (K < 1) throw std::invalid_argument("KseSpectral: K must be >= 1");
        if (Nx < 3 * K) throw std::invalid_argument("KseSpectral: need Nx >= 3K for dealiasing");
        if (Nx % 2) throw std::invalid_argument("KseSpectral: Nx must be even");
        const int m = Nx / 2 - 1;
        q_.resize(K);
        lin_.resize(K);
        for (int k = 0; k < K; ++k) {
            q_[k] = 2.0 * std::numbers::pi * (k + 1) / L;
            const double q2 = q_[k] * q_[k];
            lin_[k] = q2 - q2 * q2;
        }
        S_.resize(m, K);
        C_.resize(m, K);
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k < K; ++k) {
                const double th = 2.0 * std::numbers::pi * (k + 1) * (j + 1) / Nx;
                S_(j, k) = std::sin(th);
                C_(j, k) = std::cos(th);
            }
        }
        ascale_ = 4.0 / Nx;
    }

    double domain_length() const { return L_; }
    int modes() const { return K_; }
    int grid_size() const { return Nx_; }
    const Vector& wavenumbers() const { return q_; }
    const Vector& linear_symbol() const { return lin_; }

    // f(a): modes of -u u_x - u_xx - u_xxxx.
    Vector rhs(const Vector& a) const {
        Vector u = S_ * a;
        Vector ux = C_ * q_.cwiseProduct(a);
        return lin_.cwiseProduct(a) - ascale_ * (S_.transpose() * u.cwiseProduct(ux));
    }

    // (Df(a))^T r, the exact transpose of the discrete Jacobian.
    Vector jtv(const Vector& a, const Vector& r) const {
        Vector u = S_ * a;
        Vector ux = C_ * q_.cwiseProduct(a);
        Vector rg = S_ * r;
        Vector t1 = ascale_ * (S_.transpose() * ux.cwiseProduct(rg));
        Vector t2 = q_.cwiseProduct(ascale_ * (C_.transpose() * u.cwiseProduct(rg)));
        return lin_.cwiseProduct(r) - t1 - t2;
    }

    // Batched versions; rows of A (and R) are states.
    Matrix rhs_batch(const Matrix& A) const {
        Matrix U = A * S_.transpose();
        Matrix Ux = (A * q_.asDiagonal()) * C_.transpose();
        return A * lin_.asDiagonal() - ascale_ * (U.cwiseProduct(Ux) * S_);
    }

    Matrix jtv_batch(const Matrix& A, const Matrix& R) const {
        Matrix U = A * S_.transpose();
        Matrix Ux = (A * q_.asDiagonal()) * C_.transpose();
        Matrix Rg = R * S_.transpose();
        Matrix t1 = ascale_ * (Ux.cwiseProduct(Rg) * S_);
        Matrix t2 = (ascale_ * (U.cwiseProduct(Rg) * C_)) * q_.asDiagonal();
        return R * lin_.asDiagonal() - t1 - t2;
    }

    // Physical-space samples on the interior half grid.
    Vector to_grid(const Vector& a) const { return S_ * a; }

    // One ETDRK4 step of size dt (Cox-Matthews tableau on the diagonal
    // linear part, nonlinearity explicit).
    Vector time_step(const Vector& a, double dt) const {
        update_tables(dt);
        const auto& t = tables_;
        Vector k1 = nonlinear(a);
        Vector av = t.E2.cwiseProduct(a) + t.Q.cwiseProduct(k1);
        Vector k2 = nonlinear(av);
        Vector bv = t.E2.cwiseProduct(a) + t.Q.cwiseProduct(k2);
        Vector k3 = nonlinear(bv);
        Vector cv = t.E2.cwiseProduct(av) + t.Q.cwiseProduct(2.0 * k3 - k1);
        Vector k4 = nonlinear(cv);
        Vector out = t.E.cwiseProduct(a) + t.F1.cwiseProduct(k1) +
                     t.F2.cwiseProduct(2.0 * (k2 + k3)) + t.F3.cwiseProduct(k4);
        if (!out.allFinite() || out.norm() > 1e6)
            throw std::runtime_error("kse_time_step: blow-up detected");
        return out;
    }

    Vector nonlinear(const Vector& a) const {
        Vector u = S_ * a;
        Vector ux = C_ * q_.cwiseProduct(a);
        return -ascale_ * (S_.transpose() * u.cwiseProduct(ux));
    }

  private:
    struct EtdTables {
        double dt = -1.0;
        Vector E, E2, Q, F1, F2, F3;
    };

    void update_tables(double dt) const {
        if (tables_.dt == dt) return;
        EtdTables t;
        t.dt = dt;
        const int K = K_;
        t.E.resize(K); t.E2.resize(K); t.Q.resize(K);
        t.F1.resize(K); t.F2.resize(K); t.F3.resize(K);
        for (int k = 0; k < K; ++k) {
            const double z = dt * lin_[k];
            t.E[k] = std::exp(z);
            t.E2[k] = std::exp(0.5 * z);
            t.Q[k] = 0.5 * dt * phi1(0.5 * z);
            const double p1 = phi1(z), p2 = phi2(z), p3 = phi3(z);
            t.F1[k] = dt * (p1 - 3.0 * p2 + 4.0 * p3);
            t.F2[k] = dt * (p2 - 2.0 * p3);
            t.F3[k] = dt * (4.0 * p3 - p2);
        }
        tables_ = std::move(t);
    }

    double L_;
    int K_;
    int Nx_;
    double ascale_;
    Vector q_, lin_;
    Matrix S_, C_;
    mutable EtdTables tables_;
};

inline int kse_default_grid(int K) {
    int nx = 3 * K + 4;
    return nx + (nx % 2);
}

inline SystemDefinition make_kse(double L, int K = 48, int Nx = 0) {
    if (Nx == 0) Nx = kse_default_grid(K);
    auto sp = std::make_shared<const KseSpectral>(L, K, Nx);
    SystemDefinition sys;
    sys.name = "kse";
    sys.dim = K;
    sys.params = {{"L", L}, {"K", double(K)}, {"Nx", double(Nx)}};
    sys.kind = SystemKind::ContinuousTime;
    sys.quad_weights = Vector::Constant(K, 0.5 * L);
    sys.linear_symbol = sp->linear_symbol();
    sys.rhs = [sp](const Vector& a) { return sp->rhs(a); };
    sys.jtv = [sp](const Vector& a, const Vector& r) { return sp->jtv(a, r); };
    sys.rhs_batch = [sp](const Matrix& A) { return sp->rhs_batch(A); };
    sys.jtv_batch = [sp](const Matrix& A, const Matrix& R) { return sp->jtv_batch(A, R); };
    sys.time_step = [sp](const Vector& a, double dt) { return sp->time_step(a, dt); };
    return sys;
}

// Spectral object behind a KSE SystemDefinition built by make_kse, for code
// that wants physical-space access (plots, shadowing diagnostics).
inline std::shared_ptr<const KseSpectral> kse_spectral_of(const SystemDefinition& sys) {
    return std::make_shared<const KseSpectral>(sys.param("L"), int(sys.param("K")),
                                               int(sys.param("Nx")));
}

}  // namespace ghost
