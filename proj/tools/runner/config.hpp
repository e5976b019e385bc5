#pragma once

#include <optional>
#include <string>

#include "kfmse/monte_carlo.hpp"
#include "kfmse/scenario.hpp"

namespace kfmse::runner {

/// Where the trajectory comes from: exactly one of a CSV file, an explicit
/// maneuver description, or the built-in benchmark maneuver profile.
struct TrajectorySource {
  enum class Kind { kFile, kManeuver, kDefaultManeuver };
  Kind kind = Kind::kDefaultManeuver;
  std::string file;
  ManeuverSpec maneuver;
  double default_duration_s = 0.0;
};

/// Scenario block: either the constant-velocity benchmark scenario or a
/// fully explicit matrix specification.
struct ScenarioConfig {
  bool is_cv = true;
  CvScenario cv;

  // explicit form
  Mat f, q, h, r, sigma0, h_true, r_true;
  Vec mu0;
  NoiseFamily noise_family = NoiseFamily::kGaussian;
  double student_t_dof = 5.0;
  double t_step = 0.05;  // used when a maneuver trajectory must be sampled

  double sampling_period() const { return is_cv ? cv.t_step : t_step; }
};

struct EmitFlags {
  bool mse_csv = true;
  bool full_matrices = false;
  bool comparison = true;
  bool timing = false;
};

/// Parsed run configuration (schema_version 1). See the README for the
/// documented JSON schema.
struct RunConfig {
  int schema_version = 1;
  ScenarioConfig scenario;
  TrajectorySource trajectory;
  std::optional<McConfig> mc;
  EmitFlags emit;
  std::string base_dir;  // directory of the config file, for relative paths
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text,
                           const std::string& base_dir);

/// Materialized scenario: models plus the trajectory to evaluate on.
struct BuiltScenario {
  AssumedModel am;
  TrueMeasModel tm;
  Trajectory traj;
};

BuiltScenario build_scenario(const RunConfig& cfg);

/// Builds the models only (no trajectory); used by bench runs that sweep K.
std::pair<AssumedModel, TrueMeasModel> build_models(const RunConfig& cfg);

/// Trajectory for a given horizon: regenerates maneuver sources with a
/// total duration of last_index * T. File sources cannot be rescaled and
/// throw ConfigError when the requested horizon differs from the file's.
Trajectory build_trajectory_for(const RunConfig& cfg, int last_index);

/// Monte Carlo settings with CLI overrides and the MSE_BENCH_THREADS cap
/// applied. Throws ConfigError when no mc block and no override is present.
McConfig resolve_mc_config(const RunConfig& cfg,
                           std::optional<long> runs_override,
                           std::optional<std::uint64_t> seed_override);

}  // namespace kfmse::runner
