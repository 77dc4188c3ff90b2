// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>

#include "formation/numerics.hpp"
#include "formation/plant.hpp"

namespace formation {

/// Follower-side Kalman filter state for the leader's transmitted state.
struct EstimatorState {
  Vector x_hat;
  Matrix sigma;
  /// Assumed covariance of the leader's (unknown) input.
  Matrix input_cov;
};

namespace detail {

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail

/// Time update: x̂ ← A x̂, Σ ← A Σ Aᵀ + W_L + B Q̂_u Bᵀ.
inline EstimatorState predict(const EstimatorState& est, const SystemModel& leader) {
  detail::require(est.x_hat.size() == leader.n() && est.sigma.rows() == leader.n(),
                  "predict: dimension mismatch");
  detail::require(est.input_cov.rows() == leader.m(), "predict: input covariance must be m×m");
  const Matrix& A = leader.A();
  const Matrix& B = leader.B();
  return {A * est.x_hat,
          detail::symmetrized(A * est.sigma * A.transpose() + leader.W() +
                              B * est.input_cov * B.transpose()),
          est.input_cov};
}

/// Imaginary residue dropped when projecting the complex update onto reals.
struct UpdateDiagnostics {
  double sigma_imag_norm = 0.0;
};

/**
 * Measurement update for y = H F x + z, z ~ CN(0, σ_z² I), gated by `received`.
 *
 * The update runs in complex arithmetic; the estimate keeps the real part and
 * the covariance the (re-symmetrized) real part. A silent slot returns the
 * input unchanged.
 */
inline EstimatorState update(const EstimatorState& est, bool received, const CMatrix& H,
                             const CMatrix& F, const CVector& y, double sigma_z,
                             UpdateDiagnostics* diagnostics = nullptr) {
  detail::require(sigma_z > 0.0, "update: sigma_z must be positive");
  if (!received) return est;

  const Eigen::Index n = est.x_hat.size();
  detail::require(F.cols() == n && H.cols() == F.rows() && y.size() == H.rows(),
                  "update: dimension mismatch");

  const CMatrix HF = H * F;
  const CMatrix sigma = est.sigma.cast<std::complex<double>>();
  const CMatrix cross = sigma * HF.adjoint();
  CMatrix innovation_cov = HF * cross;
  innovation_cov.diagonal().array() += sigma_z * sigma_z;
  const Eigen::LDLT<CMatrix> innovation(innovation_cov);
  if (innovation.info() != Eigen::Success)
    throw NumericalError("update: singular innovation covariance");

  const CMatrix gain = innovation.solve(cross.adjoint()).adjoint();
  const CVector x_hat = est.x_hat.cast<std::complex<double>>();
  const CVector x_post = x_hat + gain * (y - HF * x_hat);
  const CMatrix sigma_post = (CMatrix::Identity(n, n) - gain * HF) * sigma;

  if (diagnostics != nullptr) diagnostics->sigma_imag_norm = sigma_post.imag().norm();
  return {x_post.real(), detail::symmetrized(sigma_post.real()), est.input_cov};
}

}  // namespace formation
