// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "formation/numerics.hpp"

namespace formation {

/// Raised when a caller hands `transmit` a precoder that exceeds the power
/// budget.
class PowerConstraintViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Point-to-point MIMO link. SNR is defined as P_max / σ_z².
struct LinkConfig {
  int leader_antennas = 8;
  int follower_antennas = 8;
  double sigma_z = 1.0;
  double max_power = 3.0;
  /// Bound q on ‖transmitted state‖².
  double state_bound = 3.0;

  /// Precoder budget tr(FᴴF) ≤ P_max / q.
  double power_budget() const { return max_power / state_bound; }
  double noise_variance() const { return sigma_z * sigma_z; }
  double snr_db() const { return 10.0 * std::log10(max_power / noise_variance()); }

  void validate() const {
    detail::require(leader_antennas > 0 && follower_antennas > 0,
                    "LinkConfig: antenna counts must be positive");
    detail::require(sigma_z > 0.0 && max_power > 0.0 && state_bound > 0.0,
                    "LinkConfig: sigma_z, P_max and q must be positive");
  }

  /// Link with P_max/q = `budget` and σ_z² = P_max / 10^(snr_db/10).
  static LinkConfig from_snr_db(double snr_db, int n_leader = 8, int n_follower = 8,
                                double state_bound = 3.0, double budget = 1.0) {
    LinkConfig cfg;
    cfg.leader_antennas = n_leader;
    cfg.follower_antennas = n_follower;
    cfg.state_bound = state_bound;
    cfg.max_power = budget * state_bound;
    cfg.sigma_z = std::sqrt(cfg.max_power / std::pow(10.0, snr_db / 10.0));
    return cfg;
  }
};

/// Block-fading channel matrix for one slot (N_F × N_L).
struct ChannelRealization {
  CMatrix H;
  int slot = 0;
};

/// Draws a circularly-symmetric complex Gaussian with E|z|² = variance.
template <class Rng>
std::complex<double> sample_complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

/// i.i.d. CN(0, 1) entries.
template <class Rng>
ChannelRealization sample_channel(const LinkConfig& cfg, Rng& rng, int slot = 0) {
  ChannelRealization out{CMatrix(cfg.follower_antennas, cfg.leader_antennas), slot};
  for (Eigen::Index j = 0; j < out.H.cols(); ++j)
    for (Eigen::Index i = 0; i < out.H.rows(); ++i)
      out.H(i, j) = sample_complex_gaussian(rng, 1.0);
  return out;
}

/// tr(FᴴF).
inline double transmit_power(const CMatrix& F) { return F.squaredNorm(); }

/// y = H F x + z with z ~ CN(0, σ_z² I). Throws if tr(FᴴF) exceeds
/// `power_budget` by more than 1e-9.
template <class Rng>
CVector transmit(const ChannelRealization& channel, const CMatrix& F, const Vector& x,
                 double sigma_z, double power_budget, Rng& rng) {
  detail::require(channel.H.cols() == F.rows() && F.cols() == x.size(),
                  "transmit: dimension mismatch");
  const double power = transmit_power(F);
  if (power > power_budget + 1e-9) {
    std::ostringstream msg;
    msg << "transmit: precoder power " << power << " exceeds budget " << power_budget;
    throw PowerConstraintViolation(msg.str());
  }
  CVector y = channel.H * (F * x.cast<std::complex<double>>());
  if (sigma_z > 0.0)
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y(i) += sample_complex_gaussian(rng, sigma_z * sigma_z);
  return y;
}

}  // namespace formation
