#pragma once

#include <array>
#include <utility>
#include <vector>

#include "kfmse/models.hpp"

namespace kfmse {

/// 2D constant-velocity tracking scenario with a scaled measurement-matrix
/// mismatch. State is [px, py, vx, vy]; measurements are the two positions.
struct CvScenario {
  double t_step = 0.05;    // sampling period, s
  int last_index = 3821;   // K
  double sigma_a2 = 10.0;  // white-acceleration intensity, m^2/s^3
  double eta = 0.99;       // assumed H = eta * true H
  std::array<double, 2> sigma2_true{2000.0, 2000.0};     // m^2 per axis
  std::array<double, 2> sigma2_assumed{1800.0, 1800.0};  // m^2 per axis
  Vec mu0;
  Mat sigma0;
  NoiseFamily noise_family = NoiseFamily::kGaussian;
  double student_t_dof = 5.0;

  /// The canonical benchmark configuration this library ships with.
  static CvScenario benchmark_defaults();

  void check() const;  // throws ConfigError on invalid parameters
};

/// Builds the (assumed, true) model pair:
///   F = [[I2, T I2], [0, I2]]
///   Q = sigma_a2 [[T^3/3 I2, T^2/2 I2], [T^2/2 I2, T I2]]
///   H_true = [I2 0], R_true = diag(sigma2_true)
///   H = eta H_true,  R = diag(sigma2_assumed)
std::pair<AssumedModel, TrueMeasModel> build_cv_models(const CvScenario& s);

/// One leg of a synthetic maneuvering trajectory.
struct ManeuverSegment {
  enum class Mode { kConstantVelocity, kCoordinatedTurn, kConstantAcceleration };
  Mode mode = Mode::kConstantVelocity;
  double duration_s = 1.0;
  double turn_rate = 0.0;  // rad/s, kCoordinatedTurn only
  double ax = 0.0;         // m/s^2, kConstantAcceleration only
  double ay = 0.0;
};

/// Deterministic piecewise-kinematic trajectory description: position and
/// velocity are continuous across segment boundaries.
struct ManeuverSpec {
  Vec initial_state;  // [px, py, vx, vy]
  std::vector<ManeuverSegment> segments;
};

/// Integrates the spec with exact per-step kinematics (closed-form
/// coordinated turn, no Euler stepping). Segment step counts are
/// round(duration / t_step); the total must be at least 1.
Trajectory generate_trajectory(const ManeuverSpec& spec, double t_step);

/// A maneuvering profile in the spirit of published tracking benchmarks:
/// long constant-velocity legs joined by coordinated turns plus one gentle
/// acceleration leg, speeds of order 200-270 m/s. Scaled to the requested
/// duration. This is a synthetic stand-in, not data from any benchmark set.
ManeuverSpec default_benchmark_maneuver(double duration_s);

}  // namespace kfmse
