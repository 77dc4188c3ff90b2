// SPDX-License-Identifier: Apache-2.0
//
// formation_sim: command-line front end for the leader-follower simulator.
//
//   formation_sim run             --out DIR   single episode, trace.csv
//   formation_sim ensemble        --out DIR   metrics summary, ensemble.csv
//   formation_sim sweep-snr       --out DIR   event vs matched baseline per SNR
//   formation_sim sweep-threshold --out DIR   event vs matched baseline per L_max
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "formation/formation.hpp"

namespace fs = std::filesystem;
using namespace formation;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  std::optional<std::string> scheme;
  std::optional<std::string> trigger_rule;
  std::optional<int> period;
  std::optional<double> snr_db;
  std::optional<double> L_max;
  std::optional<int> threads;
  std::vector<double> values;
  std::string out = ".";
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--realizations", o.realizations, "Monte Carlo realizations");
  cmd->add_option("--scheme", o.scheme, "event or periodic")
      ->check(CLI::IsMember({"event", "periodic"}));
  cmd->add_option("--trigger-rule", o.trigger_rule, "two_sided, transmit_drift_only or silent_drift")
      ->check(CLI::IsMember({"two_sided", "transmit_drift_only", "silent_drift"}));
  cmd->add_option("--period", o.period, "period of the periodic scheme in slots");
  cmd->add_option("--snr-db", o.snr_db, "link SNR in dB");
  cmd->add_option("--l-max", o.L_max, "trigger threshold");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  cmd->add_option("--out", o.out, "output directory");
}

SimConfig resolve(const Options& o) {
  SimConfig cfg = o.config_path.empty() ? SimConfig{} : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.realizations) cfg.realizations = *o.realizations;
  if (o.scheme) cfg.scheme = parse_scheme(*o.scheme);
  if (o.trigger_rule) {
    try {
      cfg.trigger_rule = parse_trigger_rule(*o.trigger_rule);
    } catch (const DimensionError& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.period) cfg.period = *o.period;
  if (o.snr_db) cfg.snr_db = *o.snr_db;
  if (o.L_max) cfg.L_max = *o.L_max;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void write_metadata(const fs::path& dir, const SimConfig& cfg, const std::string& command) {
  open_output(dir / "metadata.json") << run_metadata(cfg, command).dump(2) << '\n';
}

void warn_bound(long violations) {
  if (violations > 0)
    std::cerr << "warning: " << violations
              << " transmitted state(s) exceeded the bound ||x||^2 <= q\n";
}

void print_summary(std::string_view label, const EnsembleResult& r) {
  std::cout << label << ": mean_ePe=" << r.mean.mean_ePe << " (se " << r.standard_error.mean_ePe
            << ") mean_u2=" << r.mean.mean_u2 << " mean_interval=" << r.mean.mean_interval
            << " period=" << r.period << '\n';
}

int cmd_run(const Options& o) {
  const SimConfig cfg = resolve(o);
  fs::create_directories(o.out);
  const EpisodeTrace trace = run_episode(cfg, realization_seed(cfg.seed, 0));
  auto csv = open_output(fs::path(o.out) / "trace.csv");
  write_trace_csv(csv, trace);
  write_metadata(o.out, cfg, "run");
  const auto s = summarize(trace, cfg.warmup);
  std::cout << "mean_ePe=" << s.mean_ePe << " mean_u2=" << s.mean_u2
            << " mean_interval=" << s.mean_interval << " transmissions=" << s.transmissions
            << '\n';
  warn_bound(trace.bound_violations);
  return kExitOk;
}

int cmd_ensemble(const Options& o) {
  const SimConfig cfg = resolve(o);
  fs::create_directories(o.out);
  const EnsembleResult r = run_ensemble(cfg);
  auto csv = open_output(fs::path(o.out) / "ensemble.csv");
  write_summary_header(csv);
  write_summary_row(csv, "none", 0.0, cfg.snr_db, cfg.L_max, cfg.scheme, r);
  write_metadata(o.out, cfg, "ensemble");
  print_summary(to_string(cfg.scheme), r);
  warn_bound(r.bound_violations);
  return kExitOk;
}

int cmd_sweep(const Options& o, SweepAxis axis) {
  const SimConfig cfg = resolve(o);
  std::vector<double> values = o.values;
  if (values.empty()) values = axis == SweepAxis::kSnr ? cfg.snr_list_db : cfg.L_max_list;
  if (values.empty()) throw ConfigError("no sweep values");
  fs::create_directories(o.out);
  const auto rows = sweep(cfg, axis, values);
  const std::string name = axis == SweepAxis::kSnr ? "sweep_snr" : "sweep_threshold";
  auto csv = open_output(fs::path(o.out) / (name + ".csv"));
  write_sweep_csv(csv, rows);
  SimConfig recorded = cfg;
  (axis == SweepAxis::kSnr ? recorded.snr_list_db : recorded.L_max_list) = values;
  write_metadata(o.out, recorded, name);
  long violations = 0;
  for (const auto& row : rows) {
    std::cout << to_string(axis) << '=' << row.value << ' ';
    print_summary(to_string(row.scheme), row.result);
    violations += row.result.bound_violations;
  }
  warn_bound(violations);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-based MIMO precoding for leader-follower formation control"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Options opts;
  auto* run = app.add_subcommand("run", "simulate one episode and write trace.csv");
  auto* ensemble = app.add_subcommand("ensemble", "average metrics over realizations");
  auto* sweep_snr = app.add_subcommand("sweep-snr", "event vs matched baseline across SNR");
  auto* sweep_thr =
      app.add_subcommand("sweep-threshold", "event vs matched baseline across L_max");
  for (auto* cmd : {run, ensemble, sweep_snr, sweep_thr}) add_common(cmd, opts);
  sweep_snr->add_option("--values", opts.values, "SNR grid in dB (default from config)");
  sweep_thr->add_option("--values", opts.values, "thresholds (default from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(opts);
    if (*ensemble) return cmd_ensemble(opts);
    if (*sweep_snr) return cmd_sweep(opts, SweepAxis::kSnr);
    return cmd_sweep(opts, SweepAxis::kThreshold);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}
