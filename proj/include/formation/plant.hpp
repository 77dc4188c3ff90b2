// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "formation/numerics.hpp"

namespace formation {

/// State layout of the planar quadrotor model.
namespace state_index {
inline constexpr Eigen::Index kSx = 0;
inline constexpr Eigen::Index kVx = 1;
inline constexpr Eigen::Index kRoll = 2;
inline constexpr Eigen::Index kRollRate = 3;
inline constexpr Eigen::Index kSy = 4;
inline constexpr Eigen::Index kVy = 5;
inline constexpr Eigen::Index kPitch = 6;
inline constexpr Eigen::Index kPitchRate = 7;
inline constexpr Eigen::Index kUavStates = 8;
inline constexpr Eigen::Index kUavInputs = 2;
}  // namespace state_index

/**
 * Discrete-time linear plant x⁺ = A x + B u + w, w ~ N(0, W).
 *
 * The factor `noise_factor` (L with L Lᵀ = W) is derived once on construction;
 * W only needs to be positive semidefinite.
 */
class SystemModel {
 public:
  SystemModel() = default;

  SystemModel(Matrix A, Matrix B, Matrix W)
      : A_(std::move(A)), B_(std::move(B)), W_(std::move(W)) {
    detail::require(A_.rows() > 0 && A_.rows() == A_.cols(),
                    "SystemModel: A must be square");
    detail::require(B_.rows() == A_.rows() && B_.cols() > 0,
                    "SystemModel: B rows must match A");
    detail::require(W_.rows() == A_.rows() && W_.cols() == A_.rows(),
                    "SystemModel: W must be n×n");
    detail::require((W_ - W_.transpose()).norm() <= 1e-12 * std::max(1.0, W_.norm()),
                    "SystemModel: W must be symmetric");
    const auto eig = sorted_eigen(W_);
    detail::require(max_eigenvalue(-W_) <= 1e-12 * std::max(1.0, W_.norm()),
                    "SystemModel: W must be positive semidefinite");
    noise_factor_ = eig.basis * eig.values.cwiseSqrt().asDiagonal();
  }

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& W() const { return W_; }
  const Matrix& noise_factor() const { return noise_factor_; }
  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }

  SystemModel with_noise(Matrix W) const { return {A_, B_, std::move(W)}; }

 private:
  Matrix A_;
  Matrix B_;
  Matrix W_;
  Matrix noise_factor_;
};

/// Continuous-time generator of one horizontal axis: position, velocity,
/// tilt angle, tilt rate.
inline Matrix uav_axis_generator(double g) {
  Matrix A1 = Matrix::Zero(4, 4);
  A1(0, 1) = 1.0;
  A1(1, 2) = g;
  A1(2, 3) = 1.0;
  return A1;
}

inline Matrix uav_continuous_A(double g) {
  Matrix A = Matrix::Zero(8, 8);
  A.topLeftCorner(4, 4) = uav_axis_generator(g);
  A.bottomRightCorner(4, 4) = uav_axis_generator(g);
  return A;
}

inline Matrix uav_continuous_B() {
  Matrix B = Matrix::Zero(8, 2);
  B(3, 0) = 1.0;
  B(7, 1) = 1.0;
  return B;
}

/// Zero-order-hold discretization of the two-axis linearized quadrotor.
inline SystemModel build_uav_model(double Ts, double g, const Matrix& W) {
  auto [A, B] = discretize(uav_continuous_A(g), uav_continuous_B(), Ts);
  return {std::move(A), std::move(B), W};
}

/// Draws w ~ N(0, W) using the model's noise factor.
template <class Rng>
Vector sample_process_noise(const SystemModel& model, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(model.n());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return model.noise_factor() * z;
}

/// x⁺ = A x + B u + w with w drawn from `rng`.
template <class Rng>
Vector step(const SystemModel& model, const Vector& x, const Vector& u, Rng& rng) {
  detail::require(x.size() == model.n(), "step: state dimension mismatch");
  detail::require(u.size() == model.m(), "step: input dimension mismatch");
  return model.A() * x + model.B() * u + sample_process_noise(model, rng);
}

// ---------------------------------------------------------------------------
// Leader trajectory
// ---------------------------------------------------------------------------

/**
 * Leader mission: accelerate along s_x to a cruise speed, cruise, then make a
 * single lateral excursion of `maneuver_amplitude` metres toward the follower
 * (positive s_y) and return to the original lane.
 */
struct TrajectoryScenario {
  int accel_duration = 50;
  double cruise_speed = 1.0;
  int maneuver_start = 200;
  double maneuver_amplitude = 1.5;
  int maneuver_duration = 150;

  void validate() const {
    detail::require(accel_duration >= 0 && maneuver_duration >= 0 && maneuver_start >= 0,
                    "TrajectoryScenario: durations must be non-negative");
    detail::require(maneuver_start >= accel_duration,
                    "TrajectoryScenario: maneuver must start after acceleration");
    detail::require(std::isfinite(cruise_speed) && std::isfinite(maneuver_amplitude),
                    "TrajectoryScenario: non-finite speed or amplitude");
  }
};

/// Dynamically consistent reference state of the leader at slot k.
///
/// Longitudinal: linear velocity ramp over the acceleration phase. Lateral:
/// raised-cosine bump s_y(τ) = a(1 − cos 2πτ)/2 over the maneuver window, with
/// tilt angles from ṡ̇ = g·angle.
inline Vector reference_state(const TrajectoryScenario& sc, double Ts, double g, int k) {
  using namespace state_index;
  Vector r = Vector::Zero(kUavStates);
  const double t = k * Ts;
  const double v = sc.cruise_speed;
  const double t_acc = sc.accel_duration * Ts;

  if (t < t_acc) {
    const double a = v / t_acc;
    r(kSx) = 0.5 * a * t * t;
    r(kVx) = a * t;
    r(kRoll) = a / g;
  } else {
    r(kSx) = v * (t - 0.5 * t_acc);
    r(kVx) = v;
  }

  const double t0 = sc.maneuver_start * Ts;
  const double T = sc.maneuver_duration * Ts;
  if (T > 0.0 && t >= t0 && t < t0 + T) {
    constexpr double pi = std::numbers::pi;
    const double phase = 2.0 * pi * (t - t0) / T;
    const double amp = sc.maneuver_amplitude;
    r(kSy) = 0.5 * amp * (1.0 - std::cos(phase));
    r(kVy) = amp * pi / T * std::sin(phase);
    r(kPitch) = 2.0 * amp * pi * pi / (T * T) * std::cos(phase) / g;
    r(kPitchRate) = -4.0 * amp * pi * pi * pi / (T * T * T) * std::sin(phase) / g;
  }
  return r;
}

/// Expected state under constant cruise from the origin: s_x = k·Ts·v, ṡ_x = v.
/// The leader transmits x − nominal_state(k).
inline Vector nominal_state(const TrajectoryScenario& sc, double Ts, int k,
                            Eigen::Index n = state_index::kUavStates) {
  Vector nom = Vector::Zero(n);
  nom(state_index::kSx) = k * Ts * sc.cruise_speed;
  nom(state_index::kVx) = sc.cruise_speed;
  return nom;
}

/// LQR reference tracking for the leader: u_L = −K (x_L − r_k).
struct LeaderController {
  Matrix K;
  TrajectoryScenario scenario;
  double Ts = 0.1;
  double g = 9.81;
};

inline Vector leader_input(const LeaderController& ctl, int k, const Vector& x_L) {
  detail::require(k >= 0, "leader_input: negative slot");
  detail::require(x_L.size() == ctl.K.cols(), "leader_input: state dimension mismatch");
  return -ctl.K * (x_L - reference_state(ctl.scenario, ctl.Ts, ctl.g, k));
}

}  // namespace formation
