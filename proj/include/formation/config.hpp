// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formation/channel.hpp"
#include "formation/control.hpp"
#include "formation/plant.hpp"
#include "formation/precoding.hpp"
#include "formation/trigger.hpp"

namespace formation {

/// Raised for malformed or inconsistent simulation configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { kEvent, kPeriodic };

inline std::string_view to_string(Scheme s) {
  return s == Scheme::kEvent ? "event" : "periodic";
}

inline Scheme parse_scheme(std::string_view text) {
  if (text == "event") return Scheme::kEvent;
  if (text == "periodic") return Scheme::kPeriodic;
  throw ConfigError("unknown scheme: " + std::string(text));
}

/// Full simulation configuration. Defaults reproduce the reference setup.
struct SimConfig {
  // plant
  double Ts = 0.1;
  double g = 9.81;
  Matrix W_L = 1e-5 * Matrix::Identity(8, 8);
  Matrix W_F = 1e-5 * Matrix::Identity(8, 8);

  // controller
  ControllerConfig controller = default_controller();

  // estimator
  Matrix input_cov = 0.3 * Matrix::Identity(2, 2);
  Matrix sigma0 = 0.1 * Matrix::Identity(8, 8);
  /// Initial estimate of the leader state in world coordinates.
  Vector x_hat0 = Vector::Zero(8);
  /// Std of the follower's initial position error around its slot.
  double follower_position_std = 0.1;

  // link
  int leader_antennas = 8;
  int follower_antennas = 8;
  double state_bound = 3.0;
  /// P_max / q; SNR is swept through σ_z.
  double power_budget = 1.0;
  double snr_db = 15.0;
  std::vector<double> snr_list_db{-4.77121254719663, 0.0, 3.01029995663981, 10.0,
                                  18.2390874094432, 22.2184874961636, 30.0};

  // lyapunov / trigger
  Matrix P = default_lyapunov_weight();
  double L_max = 1.0;
  std::vector<double> L_max_list{0.25, 0.5, 1.0, 2.0, 4.0};
  TriggerRule trigger_rule = TriggerRule::kSilentDrift;

  // scenario and run control
  TrajectoryScenario scenario;
  int episode_length = 600;
  int warmup = 20;
  int realizations = 50;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::kEvent;
  /// Transmission period of the periodic scheme, in slots.
  int period = 1;
  /// Worker threads for ensembles; 0 picks the hardware concurrency.
  int threads = 0;

  static ControllerConfig default_controller() {
    Vector c(8);
    c << 1, 1, 0, 0, 1, 0, 0, 0;
    Vector offset = Vector::Zero(8);
    offset(state_index::kSy) = 2.5;
    return {10.0 * Matrix::Identity(8, 8), Matrix::Identity(2, 2), c.asDiagonal(), offset};
  }

  static Matrix default_lyapunov_weight() {
    Vector p(8);
    p << 1, 0, 0, 0, 1, 0, 0, 0;
    return p.asDiagonal();
  }

  LinkConfig link() const {
    return LinkConfig::from_snr_db(snr_db, leader_antennas, follower_antennas, state_bound,
                                   power_budget);
  }

  LyapunovConfig lyapunov() const { return {P, L_max}; }

  void validate() const {
    try {
      detail::require(Ts > 0.0 && g > 0.0, "Ts and g must be positive");
      detail::require(episode_length > 0, "episode_length must be positive");
      detail::require(warmup >= 0 && warmup < episode_length,
                      "warmup must lie inside the episode");
      detail::require(realizations >= 1, "realizations must be >= 1");
      detail::require(period >= 1, "period must be >= 1");
      detail::require(follower_position_std >= 0.0, "follower_position_std must be >= 0");
      detail::require(power_budget > 0.0, "power_budget must be positive");
      const auto n = state_index::kUavStates;
      const auto m = state_index::kUavInputs;
      detail::require(input_cov.rows() == m && input_cov.cols() == m, "input_cov must be 2×2");
      detail::require(sigma0.rows() == n && sigma0.cols() == n, "sigma0 must be 8×8");
      detail::require(x_hat0.size() == n, "x_hat0 must have 8 entries");
      // SystemModel checks W for symmetry and semidefiniteness.
      const SystemModel probe(Matrix::Identity(n, n), Matrix::Zero(n, m), W_L);
      (void)probe.with_noise(W_F);
      controller.validate(n, m);
      lyapunov().validate(n);
      link().validate();
      scenario.validate();
    } catch (const DimensionError& e) {
      throw ConfigError(e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// JSON mapping
// ---------------------------------------------------------------------------

namespace detail {

/// Accepts a scalar (multiple of identity), a flat array (diagonal) or an
/// array of rows.
inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows,
                               Eigen::Index cols, const std::string& key) {
  if (j.is_number()) {
    if (rows != cols) throw ConfigError(key + ": scalar form needs a square matrix");
    return j.get<double>() * Matrix::Identity(rows, cols);
  }
  if (!j.is_array()) throw ConfigError(key + ": expected number or array");
  if (!j.empty() && j.front().is_number()) {
    if (static_cast<Eigen::Index>(j.size()) != rows || rows != cols)
      throw ConfigError(key + ": diagonal form has wrong length");
    Vector d(rows);
    for (Eigen::Index i = 0; i < rows; ++i) d(i) = j[static_cast<std::size_t>(i)].get<double>();
    return d.asDiagonal();
  }
  if (static_cast<Eigen::Index>(j.size()) != rows)
    throw ConfigError(key + ": wrong number of rows");
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(key + ": wrong number of columns");
    for (Eigen::Index c = 0; c < cols; ++c) out(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return out;
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Vector vector_from_json(const nlohmann::json& j, Eigen::Index size,
                               const std::string& key) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw ConfigError(key + ": expected an array of length " + std::to_string(size));
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

inline nlohmann::json vector_to_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace detail

inline nlohmann::json to_json(const SimConfig& c) {
  using detail::matrix_to_json;
  using detail::vector_to_json;
  nlohmann::json j;
  j["Ts"] = c.Ts;
  j["g"] = c.g;
  j["W_L"] = matrix_to_json(c.W_L);
  j["W_F"] = matrix_to_json(c.W_F);
  j["Q"] = matrix_to_json(c.controller.Q);
  j["R"] = matrix_to_json(c.controller.R);
  j["C"] = matrix_to_json(c.controller.C);
  j["offset"] = vector_to_json(c.controller.offset);
  j["input_cov"] = matrix_to_json(c.input_cov);
  j["sigma0"] = matrix_to_json(c.sigma0);
  j["x_hat0"] = vector_to_json(c.x_hat0);
  j["follower_position_std"] = c.follower_position_std;
  j["leader_antennas"] = c.leader_antennas;
  j["follower_antennas"] = c.follower_antennas;
  j["state_bound"] = c.state_bound;
  j["power_budget"] = c.power_budget;
  j["snr_db"] = c.snr_db;
  j["snr_list_db"] = c.snr_list_db;
  j["P"] = matrix_to_json(c.P);
  j["L_max"] = c.L_max;
  j["L_max_list"] = c.L_max_list;
  j["trigger_rule"] = std::string(to_string(c.trigger_rule));
  j["scenario"] = {{"accel_duration", c.scenario.accel_duration},
                   {"cruise_speed", c.scenario.cruise_speed},
                   {"maneuver_start", c.scenario.maneuver_start},
                   {"maneuver_amplitude", c.scenario.maneuver_amplitude},
                   {"maneuver_duration", c.scenario.maneuver_duration}};
  j["episode_length"] = c.episode_length;
  j["warmup"] = c.warmup;
  j["realizations"] = c.realizations;
  j["seed"] = c.seed;
  j["scheme"] = std::string(to_string(c.scheme));
  j["period"] = c.period;
  j["threads"] = c.threads;
  return j;
}

/// Overlays the keys present in `j` on `base`. Unknown keys are rejected.
inline SimConfig config_from_json(const nlohmann::json& j, SimConfig base = {}) {
  using detail::matrix_from_json;
  using detail::vector_from_json;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::vector<std::string> known{
      "Ts", "g", "W_L", "W_F", "Q", "R", "C", "offset", "input_cov", "sigma0", "x_hat0",
      "follower_position_std", "leader_antennas", "follower_antennas", "state_bound",
      "power_budget", "snr_db", "snr_list_db", "P", "L_max", "L_max_list", "trigger_rule",
      "scenario", "episode_length", "warmup", "realizations", "seed", "scheme", "period",
      "threads"};
  for (const auto& item : j.items())
    if (std::find(known.begin(), known.end(), item.key()) == known.end())
      throw ConfigError("config: unknown key '" + item.key() + "'");

  try {
    SimConfig c = std::move(base);
    const auto n = state_index::kUavStates;
    const auto m = state_index::kUavInputs;
    if (j.contains("Ts")) c.Ts = j["Ts"].get<double>();
    if (j.contains("g")) c.g = j["g"].get<double>();
    if (j.contains("W_L")) c.W_L = matrix_from_json(j["W_L"], n, n, "W_L");
    if (j.contains("W_F")) c.W_F = matrix_from_json(j["W_F"], n, n, "W_F");
    if (j.contains("Q")) c.controller.Q = matrix_from_json(j["Q"], n, n, "Q");
    if (j.contains("R")) c.controller.R = matrix_from_json(j["R"], m, m, "R");
    if (j.contains("C")) c.controller.C = matrix_from_json(j["C"], n, n, "C");
    if (j.contains("offset")) c.controller.offset = vector_from_json(j["offset"], n, "offset");
    if (j.contains("input_cov")) c.input_cov = matrix_from_json(j["input_cov"], m, m, "input_cov");
    if (j.contains("sigma0")) c.sigma0 = matrix_from_json(j["sigma0"], n, n, "sigma0");
    if (j.contains("x_hat0")) c.x_hat0 = vector_from_json(j["x_hat0"], n, "x_hat0");
    if (j.contains("follower_position_std"))
      c.follower_position_std = j["follower_position_std"].get<double>();
    if (j.contains("leader_antennas")) c.leader_antennas = j["leader_antennas"].get<int>();
    if (j.contains("follower_antennas")) c.follower_antennas = j["follower_antennas"].get<int>();
    if (j.contains("state_bound")) c.state_bound = j["state_bound"].get<double>();
    if (j.contains("power_budget")) c.power_budget = j["power_budget"].get<double>();
    if (j.contains("snr_db")) c.snr_db = j["snr_db"].get<double>();
    if (j.contains("snr_list_db")) c.snr_list_db = j["snr_list_db"].get<std::vector<double>>();
    if (j.contains("P")) c.P = matrix_from_json(j["P"], n, n, "P");
    if (j.contains("L_max")) c.L_max = j["L_max"].get<double>();
    if (j.contains("L_max_list")) c.L_max_list = j["L_max_list"].get<std::vector<double>>();
    if (j.contains("trigger_rule"))
      c.trigger_rule = parse_trigger_rule(j["trigger_rule"].get<std::string>());
    if (j.contains("scenario")) {
      const auto& s = j["scenario"];
      if (s.contains("accel_duration")) c.scenario.accel_duration = s["accel_duration"].get<int>();
      if (s.contains("cruise_speed")) c.scenario.cruise_speed = s["cruise_speed"].get<double>();
      if (s.contains("maneuver_start")) c.scenario.maneuver_start = s["maneuver_start"].get<int>();
      if (s.contains("maneuver_amplitude"))
        c.scenario.maneuver_amplitude = s["maneuver_amplitude"].get<double>();
      if (s.contains("maneuver_duration"))
        c.scenario.maneuver_duration = s["maneuver_duration"].get<int>();
    }
    if (j.contains("episode_length")) c.episode_length = j["episode_length"].get<int>();
    if (j.contains("warmup")) c.warmup = j["warmup"].get<int>();
    if (j.contains("realizations")) c.realizations = j["realizations"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("scheme")) c.scheme = parse_scheme(j["scheme"].get<std::string>());
    if (j.contains("period")) c.period = j["period"].get<int>();
    if (j.contains("threads")) c.threads = j["threads"].get<int>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace formation
