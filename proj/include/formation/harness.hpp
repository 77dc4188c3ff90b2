// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "formation/channel.hpp"
#include "formation/config.hpp"
#include "formation/control.hpp"
#include "formation/estimation.hpp"
#include "formation/plant.hpp"
#include "formation/precoding.hpp"
#include "formation/trigger.hpp"

namespace formation {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of realization r: master ⊕ splitmix64(r).
inline std::uint64_t realization_seed(std::uint64_t master, std::uint64_t r) {
  return master ^ splitmix64(r);
}

/// Independent random streams of one episode. Each physical source owns a
/// stream so that, e.g., the channel sequence does not depend on how often the
/// receiver noise is drawn.
struct EpisodeStreams {
  Rng leader_noise;
  Rng follower_noise;
  Rng channel;
  Rng receiver_noise;
  Rng initial;

  explicit EpisodeStreams(std::uint64_t seed)
      : leader_noise(splitmix64(seed ^ 0x11)),
        follower_noise(splitmix64(seed ^ 0x22)),
        channel(splitmix64(seed ^ 0x33)),
        receiver_noise(splitmix64(seed ^ 0x44)),
        initial(splitmix64(seed ^ 0x55)) {}
};

// ---------------------------------------------------------------------------
// Traces and metrics
// ---------------------------------------------------------------------------

struct SlotRecord {
  int slot = 0;
  Vector x_L;
  Vector x_F;
  /// Posterior estimate of the leader in world coordinates.
  Vector x_hat;
  /// True deviation e.
  Vector e;
  Vector u_F;
  double e_P_e = 0.0;
  double u_norm2 = 0.0;
  bool gamma = false;
  double tr_sigma = 0.0;
  double expected_L = 0.0;
  double drift_silent = 0.0;
  double tx_power = 0.0;
};

struct EpisodeTrace {
  std::vector<SlotRecord> slots;
  /// Slots where a transmitted state exceeded the bound ‖x‖² ≤ q.
  int bound_violations = 0;
};

struct MetricsSummary {
  double mean_ePe = 0.0;
  double mean_u2 = 0.0;
  /// Average number of slots between consecutive transmissions.
  double mean_interval = 0.0;
  double transmissions = 0.0;
  /// Transmitted states above the bound q (a count, not averaged).
  int bound_violations = 0;
};

struct EnsembleResult {
  MetricsSummary mean;
  MetricsSummary standard_error;
  std::vector<MetricsSummary> per_realization;
  /// Period used by the periodic scheme (1 for the event scheme).
  int period = 1;
  /// Total over all realizations.
  long bound_violations = 0;
};

/**
 * Metrics over the slots k ≥ warmup. With fewer than two transmissions in the
 * window the interval is reported as the window length.
 */
inline MetricsSummary summarize(const EpisodeTrace& trace, int warmup) {
  MetricsSummary s;
  int count = 0;
  int last_tx = -1;
  int gaps = 0;
  double gap_sum = 0.0;
  for (const auto& rec : trace.slots) {
    if (rec.slot < warmup) continue;
    ++count;
    s.mean_ePe += rec.e_P_e;
    s.mean_u2 += rec.u_norm2;
    if (rec.gamma) {
      s.transmissions += 1.0;
      if (last_tx >= 0) {
        gap_sum += rec.slot - last_tx;
        ++gaps;
      }
      last_tx = rec.slot;
    }
  }
  if (count > 0) {
    s.mean_ePe /= count;
    s.mean_u2 /= count;
  }
  s.mean_interval = gaps > 0 ? gap_sum / gaps : static_cast<double>(count);
  s.bound_violations = trace.bound_violations;
  return s;
}

// ---------------------------------------------------------------------------
// Episode
// ---------------------------------------------------------------------------

/// Everything that is constant over an episode.
struct EpisodeSetup {
  SystemModel leader;
  SystemModel follower;
  ControllerGain gain;
  LeaderController leader_ctl;
  LinkConfig link;
  LyapunovConfig lyap;
  DriftModel drift;

  static EpisodeSetup build(const SimConfig& cfg) {
    cfg.validate();
    SystemModel leader = build_uav_model(cfg.Ts, cfg.g, cfg.W_L);
    SystemModel follower = leader.with_noise(cfg.W_F);
    ControllerGain gain = lqr_gain(leader, cfg.controller);
    LeaderController leader_ctl{gain.K, cfg.scenario, cfg.Ts, cfg.g};
    LyapunovConfig lyap = cfg.lyapunov();
    DriftModel drift(leader, cfg.W_F, gain, cfg.controller, lyap, cfg.input_cov);
    return {std::move(leader), std::move(follower), std::move(gain), std::move(leader_ctl),
            cfg.link(), std::move(lyap), std::move(drift)};
  }
};

/// Run-time failure inside an episode, tagged with the slot.
class EpisodeError : public NumericalError {
 public:
  EpisodeError(const std::string& what, int slot)
      : NumericalError(what + " (slot " + std::to_string(slot) + ")"), slot_(slot) {}
  int slot() const { return slot_; }

 private:
  int slot_;
};

/// Called with the trigger inputs of every slot before the decision is made.
using SlotObserver = std::function<void(int slot, const DriftContext& ctx)>;

/**
 * Simulates one episode. Per slot: the leader steps, the follower predicts,
 * the channel is drawn, the scheme decides whether to transmit, the leader's
 * state relative to the nominal cruise is sent and fused, and finally the
 * follower applies u_F = −K ê and steps.
 */
inline EpisodeTrace run_episode(const SimConfig& cfg, const EpisodeSetup& setup,
                                std::uint64_t seed, const SlotObserver& observe = nullptr) {
  using namespace state_index;
  EpisodeStreams streams(seed);
  const auto& ctl = cfg.controller;
  const Eigen::Index n = setup.leader.n();
  const LinkConfig& link = setup.link;

  Vector x_L = Vector::Zero(n);
  Vector x_F = ctl.offset;
  {
    std::normal_distribution<double> jitter(0.0, cfg.follower_position_std);
    x_F(kSx) += jitter(streams.initial);
    x_F(kSy) += jitter(streams.initial);
  }
  auto nominal = [&](int k) { return nominal_state(cfg.scenario, cfg.Ts, k, n); };
  EstimatorState est{cfg.x_hat0 - nominal(0), cfg.sigma0, cfg.input_cov};

  EpisodeTrace trace;
  trace.slots.reserve(static_cast<std::size_t>(cfg.episode_length));
  Vector u_L = Vector::Zero(setup.leader.m());

  for (int k = 0; k < cfg.episode_length; ++k) {
    if (k > 0) {
      x_L = step(setup.leader, x_L, u_L, streams.leader_noise);
      est = predict(est, setup.leader);
    }
    const ChannelRealization channel = sample_channel(link, streams.channel, k);

    const Vector e_hat_prior = estimated_deviation(x_F, est.x_hat + nominal(k), ctl);
    const DriftContext ctx{e_hat_prior, est.sigma, channel, link, &setup.drift};
    if (observe) observe(k, ctx);

    SlotRecord rec;
    rec.slot = k;
    CMatrix F;
    bool transmit_now = false;
    if (cfg.scheme == Scheme::kEvent) {
      auto [trig, pre] = decide(ctx, setup.lyap, cfg.trigger_rule);
      rec.expected_L = trig.expected_L;
      rec.drift_silent = trig.drift_silent;
      transmit_now = pre.transmit;
      F = std::move(pre.F);
    } else {
      rec.expected_L = setup.drift.expected_lyapunov(e_hat_prior, est.sigma);
      rec.drift_silent = expected_drift(ctx, est.sigma);
      transmit_now = (k % cfg.period) == 0;
      if (transmit_now) F = baseline_precoder(channel, link, n);
    }

    if (transmit_now) {
      const Vector sent = x_L - nominal(k);
      if (sent.squaredNorm() > link.state_bound) ++trace.bound_violations;
      const CVector y = transmit(channel, F, sent, link.sigma_z, link.power_budget(),
                                 streams.receiver_noise);
      UpdateDiagnostics diag;
      est = update(est, true, channel.H, F, y, link.sigma_z, &diag);
      if (diag.sigma_imag_norm > 1e-8 * std::max(1.0, est.sigma.norm()))
        throw EpisodeError("complex covariance residue above tolerance", k);
      rec.tx_power = transmit_power(F);
    }
    rec.gamma = transmit_now;

    const Vector x_hat_world = est.x_hat + nominal(k);
    const Vector e_hat = estimated_deviation(x_F, x_hat_world, ctl);
    const Vector u_F = follower_input(e_hat, setup.gain);
    const Vector e = deviation(x_F, x_L, ctl);

    rec.x_L = x_L;
    rec.x_F = x_F;
    rec.x_hat = x_hat_world;
    rec.e = e;
    rec.u_F = u_F;
    rec.e_P_e = e.dot(setup.lyap.P * e);
    rec.u_norm2 = u_F.squaredNorm();
    rec.tr_sigma = est.sigma.trace();

    if (!x_L.allFinite() || !x_F.allFinite() || !est.x_hat.allFinite() ||
        !est.sigma.allFinite() || !std::isfinite(rec.expected_L))
      throw EpisodeError("non-finite simulation state", k);

    trace.slots.push_back(std::move(rec));

    u_L = leader_input(setup.leader_ctl, k, x_L);
    x_F = step(setup.follower, x_F, u_F, streams.follower_noise);
  }
  return trace;
}

inline EpisodeTrace run_episode(const SimConfig& cfg, std::uint64_t seed) {
  return run_episode(cfg, EpisodeSetup::build(cfg), seed);
}

// ---------------------------------------------------------------------------
// Ensembles and sweeps
// ---------------------------------------------------------------------------

/// Episode failure inside an ensemble, tagged with the realization index.
class RealizationError : public NumericalError {
 public:
  RealizationError(const std::string& what, int realization)
      : NumericalError("realization " + std::to_string(realization) + ": " + what),
        realization_(realization) {}
  int realization() const { return realization_; }

 private:
  int realization_;
};

namespace detail {

inline MetricsSummary combine(const std::vector<MetricsSummary>& runs, bool standard_error) {
  MetricsSummary mean;
  const double count = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    mean.mean_ePe += r.mean_ePe / count;
    mean.mean_u2 += r.mean_u2 / count;
    mean.mean_interval += r.mean_interval / count;
    mean.transmissions += r.transmissions / count;
  }
  if (!standard_error) return mean;
  MetricsSummary se;
  if (runs.size() < 2) return se;
  auto sq = [](double v) { return v * v; };
  for (const auto& r : runs) {
    se.mean_ePe += sq(r.mean_ePe - mean.mean_ePe);
    se.mean_u2 += sq(r.mean_u2 - mean.mean_u2);
    se.mean_interval += sq(r.mean_interval - mean.mean_interval);
    se.transmissions += sq(r.transmissions - mean.transmissions);
  }
  const double scale = 1.0 / ((count - 1.0) * count);
  se.mean_ePe = std::sqrt(se.mean_ePe * scale);
  se.mean_u2 = std::sqrt(se.mean_u2 * scale);
  se.mean_interval = std::sqrt(se.mean_interval * scale);
  se.transmissions = std::sqrt(se.transmissions * scale);
  return se;
}

}  // namespace detail

/**
 * Runs `n_realizations` independent episodes and averages their metrics.
 * Realization r always uses realization_seed(cfg.seed, r), so results do not
 * depend on the number of worker threads.
 */
inline EnsembleResult run_ensemble(const SimConfig& cfg, int n_realizations) {
  detail::require(n_realizations >= 1, "run_ensemble: need at least one realization");
  const EpisodeSetup setup = EpisodeSetup::build(cfg);
  std::vector<MetricsSummary> runs(static_cast<std::size_t>(n_realizations));

  auto work = [&](int r) {
    try {
      const auto trace = run_episode(cfg, setup, realization_seed(cfg.seed, r));
      runs[static_cast<std::size_t>(r)] = summarize(trace, cfg.warmup);
    } catch (const std::exception& e) {
      throw RealizationError(e.what(), r);
    }
  };

  const int workers = std::clamp(
      cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency()), 1,
      n_realizations);
  if (workers == 1) {
    for (int r = 0; r < n_realizations; ++r) work(r);
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (int r = w; r < n_realizations; r += workers) work(r);
      }));
    for (auto& job : jobs) job.get();
  }

  EnsembleResult out;
  out.mean = detail::combine(runs, false);
  out.standard_error = detail::combine(runs, true);
  out.per_realization = std::move(runs);
  out.period = cfg.scheme == Scheme::kPeriodic ? cfg.period : 1;
  for (const auto& r : out.per_realization) out.bound_violations += r.bound_violations;
  return out;
}

inline EnsembleResult run_ensemble(const SimConfig& cfg) {
  return run_ensemble(cfg, cfg.realizations);
}

/// Nearest integer, at least one slot.
inline int matched_period(double mean_interval) {
  return std::max(1, static_cast<int>(std::lround(mean_interval)));
}

/// Periodic baseline whose period matches the event scheme's mean interval.
inline EnsembleResult run_matched_baseline(const SimConfig& cfg,
                                           const MetricsSummary& event_summary,
                                           int n_realizations) {
  detail::require(event_summary.mean_interval >= 1.0,
                  "run_matched_baseline: mean interval must be >= 1");
  SimConfig periodic = cfg;
  periodic.scheme = Scheme::kPeriodic;
  periodic.period = matched_period(event_summary.mean_interval);
  return run_ensemble(periodic, n_realizations);
}

enum class SweepAxis { kSnr, kThreshold };

inline std::string_view to_string(SweepAxis a) {
  return a == SweepAxis::kSnr ? "snr_db" : "L_max";
}

struct SweepRow {
  SweepAxis axis = SweepAxis::kSnr;
  double value = 0.0;
  Scheme scheme = Scheme::kEvent;
  EnsembleResult result;
  double snr_db = 0.0;
  double L_max = 0.0;
};

/// For each value: event ensemble first, then the interval-matched baseline.
inline std::vector<SweepRow> sweep(const SimConfig& cfg, SweepAxis axis,
                                   const std::vector<double>& values) {
  detail::require(!values.empty(), "sweep: no values");
  std::vector<SweepRow> rows;
  for (const double value : values) {
    SimConfig point = cfg;
    point.scheme = Scheme::kEvent;
    (axis == SweepAxis::kSnr ? point.snr_db : point.L_max) = value;
    point.validate();
    EnsembleResult event = run_ensemble(point, point.realizations);
    EnsembleResult baseline = run_matched_baseline(point, event.mean, point.realizations);
    rows.push_back({axis, value, Scheme::kEvent, std::move(event), point.snr_db, point.L_max});
    rows.push_back(
        {axis, value, Scheme::kPeriodic, std::move(baseline), point.snr_db, point.L_max});
  }
  return rows;
}

}  // namespace formation
