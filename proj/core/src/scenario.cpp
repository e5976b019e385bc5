#include "kfmse/scenario.hpp"

#include <cmath>
#include <string>

namespace kfmse {

CvScenario CvScenario::benchmark_defaults() {
  CvScenario s;
  s.mu0 = Vec(4);
  s.mu0 << 75000.0, 20000.0, -200.0, -180.0;
  s.sigma0 = Eigen::Vector4d(2000.0, 2000.0, 100.0, 100.0).asDiagonal();
  return s;
}

void CvScenario::check() const {
  if (!(t_step > 0.0)) {
    throw ConfigError("cv scenario: sampling period must be positive");
  }
  if (last_index < 1) {
    throw ConfigError("cv scenario: last index must be >= 1");
  }
  if (!(eta > 0.0)) {
    throw ConfigError("cv scenario: eta must be positive");
  }
  if (!(sigma_a2 > 0.0)) {
    throw ConfigError("cv scenario: sigma_a2 must be positive");
  }
  for (double v : sigma2_true) {
    if (!(v > 0.0)) {
      throw ConfigError("cv scenario: true noise variances must be positive");
    }
  }
  for (double v : sigma2_assumed) {
    if (!(v > 0.0)) {
      throw ConfigError("cv scenario: assumed noise variances must be positive");
    }
  }
  if (mu0.size() != 4 || sigma0.rows() != 4 || sigma0.cols() != 4) {
    throw ConfigError("cv scenario: mu0 must be length 4 and Sigma0 4x4");
  }
}

std::pair<AssumedModel, TrueMeasModel> build_cv_models(const CvScenario& s) {
  s.check();
  const double t = s.t_step;
  const Mat i2 = Mat::Identity(2, 2);

  Mat f = Mat::Identity(4, 4);
  f.block<2, 2>(0, 2) = t * i2;

  Mat q(4, 4);
  q.setZero();
  q.block<2, 2>(0, 0) = (t * t * t / 3.0) * i2;
  q.block<2, 2>(0, 2) = (t * t / 2.0) * i2;
  q.block<2, 2>(2, 0) = (t * t / 2.0) * i2;
  q.block<2, 2>(2, 2) = t * i2;
  q *= s.sigma_a2;

  Mat h_bar(2, 4);
  h_bar.setZero();
  h_bar.block<2, 2>(0, 0) = i2;

  Mat r_bar = Eigen::Vector2d(s.sigma2_true[0], s.sigma2_true[1]).asDiagonal();
  Mat r = Eigen::Vector2d(s.sigma2_assumed[0], s.sigma2_assumed[1]).asDiagonal();

  AssumedModel am =
      AssumedModel::make(f, q, s.eta * h_bar, r, s.mu0, s.sigma0);
  TrueMeasModel tm{h_bar, r_bar, s.noise_family, s.student_t_dof};
  return {std::move(am), std::move(tm)};
}

namespace {

Vec step_state(const Vec& x, const ManeuverSegment& seg, double t) {
  Vec out(4);
  const double px = x[0], py = x[1], vx = x[2], vy = x[3];
  switch (seg.mode) {
    case ManeuverSegment::Mode::kConstantVelocity:
      out << px + vx * t, py + vy * t, vx, vy;
      return out;
    case ManeuverSegment::Mode::kCoordinatedTurn: {
      const double w = seg.turn_rate;
      if (w == 0.0) {
        out << px + vx * t, py + vy * t, vx, vy;
        return out;
      }
      const double sw = std::sin(w * t);
      const double cw = std::cos(w * t);
      out << px + (vx * sw - vy * (1.0 - cw)) / w,
          py + (vx * (1.0 - cw) + vy * sw) / w,
          vx * cw - vy * sw,
          vx * sw + vy * cw;
      return out;
    }
    case ManeuverSegment::Mode::kConstantAcceleration:
      out << px + vx * t + 0.5 * seg.ax * t * t,
          py + vy * t + 0.5 * seg.ay * t * t,
          vx + seg.ax * t,
          vy + seg.ay * t;
      return out;
  }
  throw ConfigError("maneuver segment: unknown mode");
}

}  // namespace

Trajectory generate_trajectory(const ManeuverSpec& spec, double t_step) {
  if (!(t_step > 0.0)) {
    throw ConfigError("generate_trajectory: sampling period must be positive");
  }
  if (spec.initial_state.size() != 4) {
    throw ConfigError("generate_trajectory: initial state must be [px, py, vx, vy]");
  }
  std::vector<Vec> states;
  states.push_back(spec.initial_state);
  for (const ManeuverSegment& seg : spec.segments) {
    if (!(seg.duration_s > 0.0)) {
      throw ConfigError("generate_trajectory: segment durations must be positive");
    }
    const long steps = std::lround(seg.duration_s / t_step);
    for (long i = 0; i < steps; ++i) {
      states.push_back(step_state(states.back(), seg, t_step));
    }
  }
  if (states.size() < 2) {
    throw ConfigError("generate_trajectory: spec yields no steps");
  }
  return Trajectory::from_states(std::move(states));
}

ManeuverSpec default_benchmark_maneuver(double duration_s) {
  if (!(duration_s > 0.0)) {
    throw ConfigError("default maneuver: duration must be positive");
  }
  ManeuverSpec spec;
  spec.initial_state = Vec(4);
  spec.initial_state << 75000.0, 20000.0, -200.0, -180.0;  // ~269 m/s

  using Mode = ManeuverSegment::Mode;
  auto leg = [duration_s](Mode mode, double frac, double rate, double ax,
                          double ay) {
    ManeuverSegment s;
    s.mode = mode;
    s.duration_s = frac * duration_s;
    s.turn_rate = rate;
    s.ax = ax;
    s.ay = ay;
    return s;
  };
  spec.segments = {
      leg(Mode::kConstantVelocity, 0.22, 0.0, 0.0, 0.0),
      leg(Mode::kCoordinatedTurn, 0.16, 0.10, 0.0, 0.0),
      leg(Mode::kConstantVelocity, 0.14, 0.0, 0.0, 0.0),
      leg(Mode::kCoordinatedTurn, 0.16, -0.12, 0.0, 0.0),
      leg(Mode::kConstantAcceleration, 0.10, 0.0, -0.8, 0.6),
      leg(Mode::kConstantVelocity, 0.22, 0.0, 0.0, 0.0),
  };
  return spec;
}

}  // namespace kfmse
