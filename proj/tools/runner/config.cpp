#include "runner/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "kfmse/trajectory_csv.hpp"

namespace kfmse::runner {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

const json& require(const json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) {
    fail(std::string(where) + ": missing key '" + key + "'");
  }
  return *it;
}

Vec parse_vec(const json& j, const char* where) {
  if (!j.is_array() || j.empty()) {
    fail(std::string(where) + ": expected a non-empty array");
  }
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      fail(std::string(where) + ": non-numeric entry");
    }
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

// Row-major nested arrays.
Mat parse_mat(const json& j, const char* where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    fail(std::string(where) + ": expected nested arrays (row-major)");
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      fail(std::string(where) + ": ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

NoiseFamily parse_family(const json& j) {
  const std::string name = j.get<std::string>();
  if (name == "gaussian") return NoiseFamily::kGaussian;
  if (name == "uniform") return NoiseFamily::kUniformScaled;
  if (name == "student_t") return NoiseFamily::kStudentTScaled;
  fail("noise_family must be gaussian, uniform or student_t, got '" + name +
       "'");
}

ScenarioConfig parse_scenario(const json& j) {
  ScenarioConfig sc;
  const std::string type = require(j, "type", "scenario").get<std::string>();
  if (type == "cv") {
    sc.is_cv = true;
    CvScenario cv = CvScenario::benchmark_defaults();
    if (j.contains("T")) cv.t_step = j["T"].get<double>();
    if (j.contains("K")) cv.last_index = j["K"].get<int>();
    if (j.contains("sigma_a2")) cv.sigma_a2 = j["sigma_a2"].get<double>();
    if (j.contains("eta")) cv.eta = j["eta"].get<double>();
    if (j.contains("sigma2_true")) {
      Vec v = parse_vec(j["sigma2_true"], "scenario.sigma2_true");
      if (v.size() != 2) fail("scenario.sigma2_true needs two entries");
      cv.sigma2_true = {v[0], v[1]};
    }
    if (j.contains("sigma2_assumed")) {
      Vec v = parse_vec(j["sigma2_assumed"], "scenario.sigma2_assumed");
      if (v.size() != 2) fail("scenario.sigma2_assumed needs two entries");
      cv.sigma2_assumed = {v[0], v[1]};
    }
    if (j.contains("mu0")) cv.mu0 = parse_vec(j["mu0"], "scenario.mu0");
    if (j.contains("Sigma0")) {
      cv.sigma0 = parse_mat(j["Sigma0"], "scenario.Sigma0");
    } else if (j.contains("Sigma0_diag")) {
      Vec d = parse_vec(j["Sigma0_diag"], "scenario.Sigma0_diag");
      cv.sigma0 = Mat(d.asDiagonal());
    }
    if (j.contains("noise_family")) {
      cv.noise_family = parse_family(j["noise_family"]);
    }
    if (j.contains("student_t_dof")) {
      cv.student_t_dof = j["student_t_dof"].get<double>();
    }
    cv.check();
    sc.cv = std::move(cv);
    return sc;
  }
  if (type == "explicit") {
    sc.is_cv = false;
    sc.f = parse_mat(require(j, "F", "scenario"), "scenario.F");
    sc.q = parse_mat(require(j, "Q", "scenario"), "scenario.Q");
    sc.h = parse_mat(require(j, "H", "scenario"), "scenario.H");
    sc.r = parse_mat(require(j, "R", "scenario"), "scenario.R");
    sc.mu0 = parse_vec(require(j, "mu0", "scenario"), "scenario.mu0");
    sc.sigma0 = parse_mat(require(j, "Sigma0", "scenario"), "scenario.Sigma0");
    sc.h_true = parse_mat(require(j, "H_true", "scenario"), "scenario.H_true");
    sc.r_true = parse_mat(require(j, "R_true", "scenario"), "scenario.R_true");
    if (j.contains("noise_family")) {
      sc.noise_family = parse_family(j["noise_family"]);
    }
    if (j.contains("student_t_dof")) {
      sc.student_t_dof = j["student_t_dof"].get<double>();
    }
    if (j.contains("T")) sc.t_step = j["T"].get<double>();
    return sc;
  }
  fail("scenario.type must be 'cv' or 'explicit', got '" + type + "'");
}

ManeuverSegment parse_segment(const json& j) {
  ManeuverSegment seg;
  const std::string mode =
      require(j, "mode", "trajectory.maneuver.segment").get<std::string>();
  seg.duration_s =
      require(j, "duration", "trajectory.maneuver.segment").get<double>();
  if (mode == "cv") {
    seg.mode = ManeuverSegment::Mode::kConstantVelocity;
  } else if (mode == "turn") {
    seg.mode = ManeuverSegment::Mode::kCoordinatedTurn;
    seg.turn_rate = require(j, "rate", "turn segment").get<double>();
  } else if (mode == "accel") {
    seg.mode = ManeuverSegment::Mode::kConstantAcceleration;
    seg.ax = require(j, "ax", "accel segment").get<double>();
    seg.ay = require(j, "ay", "accel segment").get<double>();
  } else {
    fail("segment mode must be cv, turn or accel, got '" + mode + "'");
  }
  return seg;
}

TrajectorySource parse_trajectory(const json& j) {
  TrajectorySource src;
  int sources = 0;
  if (j.contains("file")) {
    ++sources;
    src.kind = TrajectorySource::Kind::kFile;
    src.file = j["file"].get<std::string>();
  }
  if (j.contains("maneuver")) {
    ++sources;
    src.kind = TrajectorySource::Kind::kManeuver;
    const json& m = j["maneuver"];
    src.maneuver.initial_state =
        parse_vec(require(m, "initial_state", "maneuver"), "initial_state");
    const json& segs = require(m, "segments", "maneuver");
    if (!segs.is_array() || segs.empty()) {
      fail("trajectory.maneuver.segments must be a non-empty array");
    }
    for (const json& s : segs) {
      src.maneuver.segments.push_back(parse_segment(s));
    }
  }
  if (j.contains("default_maneuver")) {
    ++sources;
    src.kind = TrajectorySource::Kind::kDefaultManeuver;
    src.default_duration_s =
        require(j["default_maneuver"], "duration", "default_maneuver")
            .get<double>();
  }
  if (sources != 1) {
    fail("trajectory: exactly one of 'file', 'maneuver', 'default_maneuver' "
         "is required");
  }
  return src;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  cfg.schema_version = require(j, "schema_version", "config").get<int>();
  if (cfg.schema_version != 1) {
    fail("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  cfg.scenario = parse_scenario(require(j, "scenario", "config"));
  cfg.trajectory = parse_trajectory(require(j, "trajectory", "config"));
  if (j.contains("mc")) {
    McConfig mc;
    const json& m = j["mc"];
    mc.n_runs = require(m, "runs", "mc").get<long>();
    if (m.contains("seed")) mc.seed = m["seed"].get<std::uint64_t>();
    if (m.contains("parallel_width")) {
      mc.parallel_width = m["parallel_width"].get<int>();
    }
    cfg.mc = mc;
  }
  if (j.contains("output") && j["output"].contains("emit")) {
    const json& e = j["output"]["emit"];
    if (e.contains("mse_csv")) cfg.emit.mse_csv = e["mse_csv"].get<bool>();
    if (e.contains("full_matrices")) {
      cfg.emit.full_matrices = e["full_matrices"].get<bool>();
    }
    if (e.contains("comparison")) {
      cfg.emit.comparison = e["comparison"].get<bool>();
    }
    if (e.contains("timing")) cfg.emit.timing = e["timing"].get<bool>();
  }
  // Referenced files must exist at load time.
  if (cfg.trajectory.kind == TrajectorySource::Kind::kFile) {
    std::filesystem::path p(cfg.trajectory.file);
    if (p.is_relative() && !base_dir.empty()) {
      p = std::filesystem::path(base_dir) / p;
    }
    cfg.trajectory.file = p.string();
    if (!std::filesystem::exists(p)) {
      fail("trajectory file does not exist: " + p.string());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(
      ss.str(), std::filesystem::path(path).parent_path().string());
}

std::pair<AssumedModel, TrueMeasModel> build_models(const RunConfig& cfg) {
  if (cfg.scenario.is_cv) {
    return build_cv_models(cfg.scenario.cv);
  }
  const ScenarioConfig& sc = cfg.scenario;
  AssumedModel am =
      AssumedModel::make(sc.f, sc.q, sc.h, sc.r, sc.mu0, sc.sigma0);
  TrueMeasModel tm{sc.h_true, sc.r_true, sc.noise_family, sc.student_t_dof};
  return {std::move(am), std::move(tm)};
}

namespace {

ManeuverSpec scaled_to_duration(ManeuverSpec spec, double duration_s) {
  double total = 0.0;
  for (const auto& s : spec.segments) {
    total += s.duration_s;
  }
  const double scale = duration_s / total;
  for (auto& s : spec.segments) {
    s.duration_s *= scale;
  }
  return spec;
}

}  // namespace

Trajectory build_trajectory_for(const RunConfig& cfg, int last_index) {
  const double t_step = cfg.scenario.sampling_period();
  switch (cfg.trajectory.kind) {
    case TrajectorySource::Kind::kFile: {
      Trajectory t = load_trajectory_csv(cfg.trajectory.file);
      if (last_index >= 0 && t.last_index() != last_index) {
        throw ConfigError("trajectory file covers K=" +
                          std::to_string(t.last_index()) +
                          " but the run needs K=" +
                          std::to_string(last_index));
      }
      return t;
    }
    case TrajectorySource::Kind::kManeuver: {
      ManeuverSpec spec = cfg.trajectory.maneuver;
      if (last_index >= 0) {
        spec = scaled_to_duration(std::move(spec), last_index * t_step);
      }
      Trajectory t = generate_trajectory(spec, t_step);
      if (last_index >= 0 && t.last_index() != last_index) {
        // Rounding of segment boundaries can drop or add a step; trim or
        // extend the last leg at constant velocity to hit the horizon.
        std::vector<Vec> states = std::move(t.states);
        while (static_cast<int>(states.size()) - 1 > last_index) {
          states.pop_back();
        }
        while (static_cast<int>(states.size()) - 1 < last_index) {
          Vec x = states.back();
          x[0] += x[2] * t_step;
          x[1] += x[3] * t_step;
          states.push_back(std::move(x));
        }
        t = Trajectory::from_states(std::move(states));
      }
      return t;
    }
    case TrajectorySource::Kind::kDefaultManeuver: {
      const double duration = last_index >= 0
                                  ? last_index * t_step
                                  : cfg.trajectory.default_duration_s;
      ManeuverSpec spec = default_benchmark_maneuver(duration);
      Trajectory t = generate_trajectory(spec, t_step);
      if (last_index >= 0) {
        std::vector<Vec> states = std::move(t.states);
        while (static_cast<int>(states.size()) - 1 > last_index) {
          states.pop_back();
        }
        while (static_cast<int>(states.size()) - 1 < last_index) {
          Vec x = states.back();
          x[0] += x[2] * t_step;
          x[1] += x[3] * t_step;
          states.push_back(std::move(x));
        }
        return Trajectory::from_states(std::move(states));
      }
      return t;
    }
  }
  throw ConfigError("unknown trajectory source");
}

BuiltScenario build_scenario(const RunConfig& cfg) {
  auto [am, tm] = build_models(cfg);
  int want_last = -1;
  if (cfg.scenario.is_cv &&
      cfg.trajectory.kind != TrajectorySource::Kind::kFile) {
    want_last = cfg.scenario.cv.last_index;
  }
  Trajectory traj = build_trajectory_for(cfg, want_last);
  return BuiltScenario{std::move(am), std::move(tm), std::move(traj)};
}

McConfig resolve_mc_config(const RunConfig& cfg,
                           std::optional<long> runs_override,
                           std::optional<std::uint64_t> seed_override) {
  McConfig mc;
  if (cfg.mc) {
    mc = *cfg.mc;
  } else if (!runs_override) {
    throw ConfigError("this subcommand needs an 'mc' config block or --runs");
  }
  if (runs_override) mc.n_runs = *runs_override;
  if (seed_override) mc.seed = *seed_override;
  if (const char* cap = std::getenv("MSE_BENCH_THREADS")) {
    const int max_threads = std::atoi(cap);
    if (max_threads >= 1) {
      const int width = mc.parallel_width > 0 ? mc.parallel_width
                                              : max_threads;
      mc.parallel_width = std::min(width, max_threads);
    }
  }
  return mc;
}

}  // namespace kfmse::runner
