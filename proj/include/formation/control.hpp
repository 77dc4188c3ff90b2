// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "formation/numerics.hpp"
#include "formation/plant.hpp"

namespace formation {

/// Formation controller weights and geometry.
///
/// `C` selects which leader states the follower copies (diagonal 0/1) and
/// `offset` is the desired follower-minus-leader displacement s̄.
struct ControllerConfig {
  Matrix Q;
  Matrix R;
  Matrix C;
  Vector offset;

  void validate(Eigen::Index n, Eigen::Index m) const {
    detail::require(Q.rows() == n && Q.cols() == n, "ControllerConfig: Q must be n×n");
    detail::require(R.rows() == m && R.cols() == m, "ControllerConfig: R must be m×m");
    detail::require(C.rows() == n && C.cols() == n, "ControllerConfig: C must be n×n");
    detail::require(offset.size() == n, "ControllerConfig: offset must be an n-vector");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double c = C(i, j);
        const bool ok = (i == j) ? (c == 0.0 || c == 1.0) : c == 0.0;
        detail::require(ok, "ControllerConfig: C must be diagonal with 0/1 entries");
      }
    detail::require(max_eigenvalue(-Q) <= 1e-12 * std::max(1.0, Q.norm()),
                    "ControllerConfig: Q must be positive semidefinite");
    detail::require(Eigen::LLT<Matrix>(R).info() == Eigen::Success,
                    "ControllerConfig: R must be positive definite");
  }
};

/// Constant state-feedback gain together with the closed loop A − B K.
struct ControllerGain {
  Matrix K;
  Matrix closed_loop;
};

/// K = (BᵀSB + R)⁻¹ BᵀSA with S the stabilizing DARE solution.
inline ControllerGain lqr_gain(const Matrix& A, const Matrix& B, const Matrix& Q,
                               const Matrix& R) {
  if (!is_stabilizable(A, B))
    throw NumericalError("lqr_gain: (A, B) is not stabilizable");
  const Matrix S = solve_dare(A, B, Q, R);
  const Matrix BtS = B.transpose() * S;
  Matrix K = (BtS * B + R).ldlt().solve(BtS * A);
  Matrix closed = A - B * K;
  if (spectral_radius(closed) >= 1.0)
    throw NumericalError("lqr_gain: closed loop is not stable");
  return {std::move(K), std::move(closed)};
}

inline ControllerGain lqr_gain(const SystemModel& model, const ControllerConfig& cfg) {
  cfg.validate(model.n(), model.m());
  return lqr_gain(model.A(), model.B(), cfg.Q, cfg.R);
}

/// e = x_F − C x_L − s̄.
inline Vector deviation(const Vector& x_F, const Vector& x_L, const ControllerConfig& cfg) {
  detail::require(x_F.size() == x_L.size() && x_F.size() == cfg.offset.size(),
                  "deviation: dimension mismatch");
  return x_F - cfg.C * x_L - cfg.offset;
}

/// ê = x_F − C x̂_L − s̄.
inline Vector estimated_deviation(const Vector& x_F, const Vector& x_hat_L,
                                  const ControllerConfig& cfg) {
  return deviation(x_F, x_hat_L, cfg);
}

/// u_F = −K ê.
inline Vector follower_input(const Vector& e_hat, const ControllerGain& gain) {
  detail::require(e_hat.size() == gain.K.cols(), "follower_input: dimension mismatch");
  return -gain.K * e_hat;
}

/// Noise and input realizations entering one step of the error recursion.
struct ErrorStepInputs {
  Vector e_hat;
  Vector x_hat_L;
  Vector x_L;
  Vector u_L;
  Vector w_F;
  Vector w_L;
};

/**
 * Next control deviation in closed form:
 *
 *   e⁺ = (A − BK) ê + (A C x̂_L − C A x_L) + (A − I) s̄ − C B u_L + w_F − C w_L.
 *
 * When A and C commute and C w_L = w_L this collapses to the familiar
 * (A − BK) ê + C A (x̂_L − x_L) + (A − I) s̄ − C B u_L + w_F − w_L.
 */
inline Vector next_deviation(const SystemModel& model, const ControllerGain& gain,
                             const ControllerConfig& cfg, const ErrorStepInputs& in) {
  const Matrix& A = model.A();
  const Eigen::Index n = model.n();
  return gain.closed_loop * in.e_hat + A * cfg.C * in.x_hat_L - cfg.C * A * in.x_L +
         (A - Matrix::Identity(n, n)) * cfg.offset - cfg.C * model.B() * in.u_L + in.w_F -
         cfg.C * in.w_L;
}

/// The commuting-C form of `next_deviation`; exact only when AC = CA and Cw_L = w_L.
inline Vector next_deviation_commuting(const SystemModel& model, const ControllerGain& gain,
                                       const ControllerConfig& cfg,
                                       const ErrorStepInputs& in) {
  const Matrix& A = model.A();
  const Eigen::Index n = model.n();
  return gain.closed_loop * in.e_hat + cfg.C * A * (in.x_hat_L - in.x_L) +
         (A - Matrix::Identity(n, n)) * cfg.offset - cfg.C * model.B() * in.u_L + in.w_F -
         in.w_L;
}

}  // namespace formation
