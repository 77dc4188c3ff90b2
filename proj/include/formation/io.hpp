// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "formation/config.hpp"
#include "formation/harness.hpp"

namespace formation {

inline constexpr const char* kVersion = "formation-sim 0.1.0";

namespace detail {

/// Shortest round-trip representation, so repeated runs are byte-identical.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << fmt(v(i));
}

}  // namespace detail

/// slot, x_L0..7, x_F0..7, xhat0..7, e_P_e, u_norm2, gamma, tr_sigma,
/// expected_L, drift_silent, tx_power
inline void write_trace_csv(std::ostream& os, const EpisodeTrace& trace) {
  os << "slot";
  for (const char* prefix : {"x_L", "x_F", "xhat"})
    for (int i = 0; i < 8; ++i) os << ',' << prefix << i;
  os << ",e_P_e,u_norm2,gamma,tr_sigma,expected_L,drift_silent,tx_power\n";
  for (const auto& r : trace.slots) {
    os << r.slot;
    detail::write_vector(os, r.x_L);
    detail::write_vector(os, r.x_F);
    detail::write_vector(os, r.x_hat);
    os << ',' << detail::fmt(r.e_P_e) << ',' << detail::fmt(r.u_norm2) << ','
       << (r.gamma ? 1 : 0) << ',' << detail::fmt(r.tr_sigma) << ','
       << detail::fmt(r.expected_L) << ',' << detail::fmt(r.drift_silent) << ','
       << detail::fmt(r.tx_power) << '\n';
  }
}

inline void write_summary_header(std::ostream& os) {
  os << "axis,value,snr_db,L_max,scheme,period,realizations,mean_ePe,se_ePe,mean_u2,se_u2,"
        "mean_interval,se_interval,transmissions\n";
}

inline void write_summary_row(std::ostream& os, std::string_view axis, double value,
                              double snr_db, double L_max, Scheme scheme,
                              const EnsembleResult& r) {
  using detail::fmt;
  os << axis << ',' << fmt(value) << ',' << fmt(snr_db) << ',' << fmt(L_max) << ','
     << to_string(scheme) << ',' << r.period << ',' << r.per_realization.size() << ','
     << fmt(r.mean.mean_ePe) << ',' << fmt(r.standard_error.mean_ePe) << ','
     << fmt(r.mean.mean_u2) << ',' << fmt(r.standard_error.mean_u2) << ','
     << fmt(r.mean.mean_interval) << ',' << fmt(r.standard_error.mean_interval) << ','
     << fmt(r.mean.transmissions) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  write_summary_header(os);
  for (const auto& row : rows)
    write_summary_row(os, to_string(row.axis), row.value, row.snr_db, row.L_max, row.scheme,
                      row.result);
}

/// Sidecar recording the resolved configuration.
inline nlohmann::json run_metadata(const SimConfig& cfg, std::string_view command) {
  nlohmann::json j;
  j["version"] = kVersion;
  j["command"] = std::string(command);
  j["snr_convention"] = "SNR = P_max / sigma_z^2 with P_max / q = power_budget";
  j["seed_derivation"] = "realization r uses seed ^ splitmix64(r)";
  j["config"] = to_json(cfg);
  return j;
}

}  // namespace formation
