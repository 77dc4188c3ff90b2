// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "formation/precoding.hpp"

namespace formation {

/// How the drift condition gates a transmission.
enum class TriggerRule {
  /// Fire only if the silent drift is non-negative and the drift under the
  /// optimal precoder is non-positive.
  kTwoSided,
  /// Fire if the drift under the optimal precoder is non-positive.
  kTransmitDriftOnly,
  /// Fire if the silent drift is non-negative.
  kSilentDrift,
};

inline std::string_view to_string(TriggerRule rule) {
  switch (rule) {
    case TriggerRule::kTwoSided: return "two_sided";
    case TriggerRule::kTransmitDriftOnly: return "transmit_drift_only";
    case TriggerRule::kSilentDrift: return "silent_drift";
  }
  return "unknown";
}

inline TriggerRule parse_trigger_rule(std::string_view text) {
  if (text == "two_sided") return TriggerRule::kTwoSided;
  if (text == "transmit_drift_only") return TriggerRule::kTransmitDriftOnly;
  if (text == "silent_drift") return TriggerRule::kSilentDrift;
  throw DimensionError("unknown trigger rule: " + std::string(text));
}

struct TriggerDecision {
  bool fire = false;
  double expected_L = 0.0;
  double drift_silent = 0.0;
  /// NaN when the optimal precoder was not evaluated.
  double drift_transmit = std::numeric_limits<double>::quiet_NaN();
};

struct PrecoderDecision {
  CMatrix F;
  bool transmit = false;
  double expected_L = 0.0;
  /// Expected drift under the chosen F.
  double expected_drift = 0.0;
  double mu = 0.0;
};

inline double expected_lyapunov(const Vector& e_hat, const Matrix& sigma,
                                const LyapunovConfig& lyap, const ControllerConfig& cfg) {
  return e_hat.dot(lyap.P * e_hat) + (cfg.C.transpose() * lyap.P * cfg.C * sigma).trace();
}

/// Event-triggering policy evaluated on the a-priori covariance.
inline std::pair<TriggerDecision, PrecoderDecision> decide(
    const DriftContext& ctx, const LyapunovConfig& lyap,
    TriggerRule rule = TriggerRule::kSilentDrift) {
  const Eigen::Index n = ctx.sigma_prior.rows();
  TriggerDecision trig;
  trig.expected_L = ctx.terms->expected_lyapunov(ctx.e_hat, ctx.sigma_prior);
  trig.drift_silent = expected_drift(ctx, ctx.sigma_prior);

  PrecoderDecision pre{CMatrix::Zero(ctx.channel.H.cols(), n), false, trig.expected_L,
                       trig.drift_silent, 0.0};

  if (trig.expected_L <= lyap.L_max) return {trig, pre};
  if (rule != TriggerRule::kTransmitDriftOnly && trig.drift_silent < 0.0) return {trig, pre};

  auto solution =
      lyapunov_precoder(ctx.sigma_prior, ctx.channel, ctx.terms->lambda_max(), ctx.link);
  if (!solution.active) return {trig, pre};

  const Matrix sigma_post =
      posterior_cov(ctx.sigma_prior, ctx.channel.H, solution.F, ctx.link.sigma_z);
  trig.drift_transmit = expected_drift(ctx, sigma_post);
  if (rule != TriggerRule::kSilentDrift && trig.drift_transmit > 0.0) return {trig, pre};

  trig.fire = true;
  pre.F = std::move(solution.F);
  pre.transmit = true;
  pre.expected_drift = trig.drift_transmit;
  pre.mu = solution.mu;
  return {trig, pre};
}

}  // namespace formation
