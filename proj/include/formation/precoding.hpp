// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>

#include "formation/channel.hpp"
#include "formation/control.hpp"
#include "formation/numerics.hpp"
#include "formation/plant.hpp"

namespace formation {

/// Quadratic Lyapunov function L(e) = eᵀ P e and the trigger threshold.
struct LyapunovConfig {
  Matrix P;
  double L_max = 1.0;

  void validate(Eigen::Index n) const {
    detail::require(P.rows() == n && P.cols() == n, "LyapunovConfig: P must be n×n");
    detail::require((P - P.transpose()).norm() <= 1e-12 * std::max(1.0, P.norm()),
                    "LyapunovConfig: P must be symmetric");
    detail::require(max_eigenvalue(-P) <= 1e-12 * std::max(1.0, P.norm()),
                    "LyapunovConfig: P must be positive semidefinite");
    detail::require(L_max >= 0.0 && std::isfinite(L_max),
                    "LyapunovConfig: L_max must be non-negative");
  }
};

/// Eigenvalues below this are lifted before Σ is inverted.
inline constexpr double kCovarianceFloor = 1e-12;

/**
 * Slot-independent pieces of the expected one-step Lyapunov drift.
 *
 * With Ã = A − BK the expected drift given ê and the posterior covariance Σ is
 *
 *   êᵀ(ÃᵀPÃ − P)ê + êᵀÃᵀ(P+Pᵀ)(A−I)s̄ + s̄ᵀ(A−I)ᵀP(A−I)s̄
 *     + tr(P(W_F+W_L)) + tr(BᵀCᵀPCB Q_u) + tr((AᵀCᵀPCA − CᵀPC) Σ).
 *
 * Only the last term depends on the precoder. It is bounded above by
 * λ_max(M)·tr(Σ) with M = ½(AᵀCᵀ(P+Pᵀ)CA − Cᵀ(P+Pᵀ)C).
 */
class DriftModel {
 public:
  DriftModel(const SystemModel& leader, const Matrix& follower_noise,
             const ControllerGain& gain, const ControllerConfig& ctl,
             const LyapunovConfig& lyap, const Matrix& input_cov) {
    const Eigen::Index n = leader.n();
    const Matrix& A = leader.A();
    const Matrix& B = leader.B();
    const Matrix& C = ctl.C;
    const Matrix& P = lyap.P;
    const Matrix& Acl = gain.closed_loop;
    const Matrix AmI = A - Matrix::Identity(n, n);
    const Matrix Psym = P + P.transpose();

    error_quadratic_ = Acl.transpose() * P * Acl - P;
    error_linear_ = Acl.transpose() * Psym * AmI * ctl.offset;
    const Vector drift_offset = AmI * ctl.offset;
    const Matrix CB = C * B;
    constant_ = drift_offset.dot(P * drift_offset) +
                (P * (follower_noise + leader.W())).trace() +
                (CB.transpose() * P * CB * input_cov).trace();
    const Matrix CA = C * A;
    covariance_weight_ = CA.transpose() * P * CA - C.transpose() * P * C;
    lyapunov_weight_ = C.transpose() * P * C;
    bound_matrix_ = 0.5 * (CA.transpose() * Psym * CA - C.transpose() * Psym * C);
    lambda_max_ = max_eigenvalue(bound_matrix_);
    P_ = P;
  }

  /// Expected drift for estimated deviation ê and posterior covariance Σ.
  double expected_drift(const Vector& e_hat, const Matrix& sigma_post) const {
    return e_hat.dot(error_quadratic_ * e_hat) + e_hat.dot(error_linear_) + constant_ +
           (covariance_weight_ * sigma_post).trace();
  }

  /// E[eᵀPe] = êᵀPê + tr(CᵀPC Σ).
  double expected_lyapunov(const Vector& e_hat, const Matrix& sigma) const {
    return e_hat.dot(P_ * e_hat) + (lyapunov_weight_ * sigma).trace();
  }

  /// AᵀCᵀPCA − CᵀPC.
  const Matrix& covariance_weight() const { return covariance_weight_; }
  const Matrix& bound_matrix() const { return bound_matrix_; }
  double lambda_max() const { return lambda_max_; }

 private:
  Matrix P_;
  Matrix error_quadratic_;
  Vector error_linear_;
  double constant_ = 0.0;
  Matrix covariance_weight_;
  Matrix lyapunov_weight_;
  Matrix bound_matrix_;
  double lambda_max_ = 0.0;
};

/// Per-slot inputs of the drift evaluation.
struct DriftContext {
  Vector e_hat;
  Matrix sigma_prior;
  ChannelRealization channel;
  LinkConfig link;
  const DriftModel* terms = nullptr;
};

inline double expected_drift(const DriftContext& ctx, const Matrix& sigma_post) {
  return ctx.terms->expected_drift(ctx.e_hat, sigma_post);
}

// ---------------------------------------------------------------------------
// Posterior covariance
// ---------------------------------------------------------------------------

/// Σ⁻¹ with eigenvalues lifted to at least `floor`.
inline Matrix regularized_inverse(const Matrix& sigma, double floor = kCovarianceFloor) {
  const auto eig = sorted_eigen(sigma);
  const Vector inv = eig.values.cwiseMax(floor).cwiseInverse();
  return eig.basis * inv.asDiagonal() * eig.basis.transpose();
}

/// (Σ⁻¹ + FᴴHᴴHF / σ_z²)⁻¹ in complex arithmetic.
inline CMatrix posterior_cov_complex(const Matrix& sigma_prior, const CMatrix& H,
                                     const CMatrix& F, double sigma_z) {
  detail::require(sigma_z > 0.0, "posterior_cov: sigma_z must be positive");
  detail::require(F.cols() == sigma_prior.rows() && H.cols() == F.rows(),
                  "posterior_cov: dimension mismatch");
  const Eigen::Index n = sigma_prior.rows();
  const CMatrix HF = H * F;
  CMatrix information = regularized_inverse(sigma_prior).cast<std::complex<double>>();
  information += HF.adjoint() * HF / (sigma_z * sigma_z);
  const Eigen::LDLT<CMatrix> ldlt(information);
  return ldlt.solve(CMatrix::Identity(n, n));
}

/// Real, symmetrized part of `posterior_cov_complex`.
inline Matrix posterior_cov(const Matrix& sigma_prior, const CMatrix& H, const CMatrix& F,
                            double sigma_z) {
  const Matrix re = posterior_cov_complex(sigma_prior, H, F, sigma_z).real();
  return 0.5 * (re + re.transpose());
}

// ---------------------------------------------------------------------------
// Precoders
// ---------------------------------------------------------------------------

struct PrecoderSolution {
  CMatrix F;
  /// Lagrange multiplier of the power constraint (0 when inactive).
  double mu = 0.0;
  /// Power tr(FᴴF) spent on each channel mode.
  Vector mode_power;
  bool active = false;
};

namespace detail {

inline Eigen::Index usable_modes(const SortedSvd& svd, Eigen::Index n) {
  const double top = svd.singulars.size() > 0 ? svd.singulars(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.singulars.size(); ++i)
    if (svd.singulars(i) > 1e-12 * std::max(1.0, top)) ++rank;
  return std::min(rank, n);
}

inline PrecoderSolution silent(Eigen::Index n_tx, Eigen::Index n) {
  return {CMatrix::Zero(n_tx, n), 0.0, Vector::Zero(0), false};
}

}  // namespace detail

/**
 * Precoder minimizing λ_max(M)·tr(Σ_post) subject to tr(FᴴF) ≤ P_max/q.
 *
 * With H = U Π Vᴴ and Σ_prior = S Λ Sᵀ (both sorted descending, mode i paired
 * with eigen-direction i):
 *
 *   F = V Π⁻¹ ([w Π − σ_z² Λ⁻¹]⁺)^{1/2} Sᵀ,   w = √(λ_max(M) σ_z² / μ),
 *
 * where the water level w is chosen so that the budget is met with equality.
 * Returns an inactive (zero) precoder when λ_max(M) ≤ 0 or Σ_prior vanishes.
 */
inline PrecoderSolution lyapunov_precoder(const Matrix& sigma_prior,
                                          const ChannelRealization& channel,
                                          double lambda_max, const LinkConfig& link) {
  const Eigen::Index n = sigma_prior.rows();
  const Eigen::Index n_tx = channel.H.cols();
  if (!(lambda_max > 0.0)) return detail::silent(n_tx, n);

  const auto eig = sorted_eigen(sigma_prior);
  if (eig.values(0) <= kCovarianceFloor) return detail::silent(n_tx, n);

  const auto svd = sorted_svd(channel.H);
  const Eigen::Index r = detail::usable_modes(svd, n);
  if (r == 0) return detail::silent(n_tx, n);

  const double noise = link.noise_variance();
  const Vector gain = svd.singulars.head(r);
  const Vector seabed = noise * eig.values.head(r).cwiseMax(kCovarianceFloor).cwiseInverse();
  auto allocation = [&](double level) {
    return (level * gain - seabed).cwiseMax(0.0).eval();
  };
  auto spent = [&](double level) {
    return allocation(level).cwiseQuotient(gain.cwiseAbs2()).sum();
  };

  const double budget = link.power_budget();
  const double level = waterfill_level(spent, budget);
  Vector y = allocation(level);
  Vector power = y.cwiseQuotient(gain.cwiseAbs2());
  power *= budget / power.sum();

  const Vector amplitude = power.cwiseSqrt();  // √y / π
  CMatrix F = svd.right.leftCols(r) * amplitude.cast<std::complex<double>>().asDiagonal() *
              eig.basis.leftCols(r).transpose().cast<std::complex<double>>();
  return {std::move(F), lambda_max * noise / (level * level), std::move(power), true};
}

/**
 * Capacity-maximizing water-filling over the channel modes, ignoring the
 * control state: pᵢ = [w − σ_z²/πᵢ²]⁺ with Σ pᵢ = P_max/q, and state component
 * i sent on mode i, F = V diag(√p).
 */
inline CMatrix baseline_precoder(const ChannelRealization& channel, const LinkConfig& link,
                                 Eigen::Index n) {
  const Eigen::Index n_tx = channel.H.cols();
  const auto svd = sorted_svd(channel.H);
  const Eigen::Index r = detail::usable_modes(svd, n);
  if (r == 0) throw NumericalError("baseline_precoder: channel has no usable mode");

  const Vector floors = link.noise_variance() * svd.singulars.head(r).cwiseAbs2().cwiseInverse();
  const double budget = link.power_budget();
  Vector power = waterfill(floors, budget).allocation;
  power *= budget / power.sum();

  CMatrix F = CMatrix::Zero(n_tx, n);
  for (Eigen::Index i = 0; i < r; ++i) F.col(i) = std::sqrt(power(i)) * svd.right.col(i);
  return F;
}

}  // namespace formation
