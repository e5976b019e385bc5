#include "runner/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "kfmse/trajectory_csv.hpp"

namespace kfmse::runner {
namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  return out;
}

fs::path ensure_out_dir(const RunOptions& opt) {
  if (opt.out_dir.empty()) {
    throw ConfigError("an output directory is required (--out)");
  }
  fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_row_values(std::ostream& out, const std::vector<double>& values) {
  for (double v : values) {
    out << ',' << format_double(v);
  }
  out << "\n";
}

void mse_header(std::ostream& out, int nx, bool with_se) {
  out << "k";
  for (int i = 1; i <= nx; ++i) {
    out << ",rmse_filter_" << i << ",rmse_smoother_" << i << ",bias_filter_"
        << i << ",bias_smoother_" << i << ",sqrtP_filter_" << i
        << ",sqrtP_smoother_" << i;
  }
  if (with_se) {
    for (int i = 1; i <= nx; ++i) {
      out << ",stderr_filter_" << i << ",stderr_smoother_" << i;
    }
  }
  out << "\n";
}

double sqrt_diag(const Mat& m, int i) { return std::sqrt(std::max(m(i, i), 0.0)); }

void write_matrix_block(std::ostream& out, const char* name, const Mat& m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      out << name << ',' << r << ',' << c << ',' << format_double(m(r, c))
          << "\n";
    }
  }
}

void write_full_matrices(const MseRow& row, const fs::path& dir) {
  char name[32];
  std::snprintf(name, sizeof(name), "step_%05d.csv", row.k);
  std::ofstream out = open_out(dir / name);
  out << "matrix,i,j,value\n";
  write_matrix_block(out, "mse_filter", row.mse_filter);
  write_matrix_block(out, "mse_smoother", row.mse_smoother);
  write_matrix_block(out, "cov_filter", row.cov_filter);
  write_matrix_block(out, "cov_smoother", row.cov_smoother);
  write_matrix_block(out, "p_filter", row.p_filter);
  write_matrix_block(out, "p_smoother", row.p_smoother);
  write_matrix_block(out, "bias_filter", Mat(row.bias_filter));
  write_matrix_block(out, "bias_smoother", Mat(row.bias_smoother));
}

void append_mse_row(std::ostream& out, const MseRow& row) {
  const int nx = static_cast<int>(row.bias_filter.size());
  out << row.k;
  std::vector<double> vals;
  vals.reserve(6 * nx);
  for (int i = 0; i < nx; ++i) {
    vals.push_back(sqrt_diag(row.mse_filter, i));
    vals.push_back(sqrt_diag(row.mse_smoother, i));
    vals.push_back(row.bias_filter[i]);
    vals.push_back(row.bias_smoother[i]);
    vals.push_back(sqrt_diag(row.p_filter, i));
    vals.push_back(sqrt_diag(row.p_smoother, i));
  }
  write_row_values(out, vals);
}

struct Timing {
  std::vector<std::pair<std::string, double>> phases;
  void note(std::string phase, double seconds) {
    phases.emplace_back(std::move(phase), seconds);
  }
  void write(const fs::path& path) const {
    std::ofstream out = open_out(path);
    out << "phase,seconds\n";
    for (const auto& [phase, seconds] : phases) {
      out << phase << ',' << format_double(seconds) << "\n";
    }
  }
};

template <typename F>
double timed(F&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) {
    throw ShapeMismatch("fit_line: inputs must be non-empty and equal length");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinearFit fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) {
    fit.slope = 0.0;
    fit.intercept = sy / n;
  } else {
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
  }
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double pred = fit.slope * x[i] + fit.intercept;
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

void write_mse_csv(const MseReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  const int nx = static_cast<int>(report.bias_filter[0].size());
  mse_header(out, nx, false);
  for (int k = 0; k <= report.last_index(); ++k) {
    MseRow row;
    row.k = k;
    row.mse_filter = report.mse_filter[k];
    row.mse_smoother = report.mse_smoother[k];
    row.bias_filter = report.bias_filter[k];
    row.bias_smoother = report.bias_smoother[k];
    row.cov_filter = report.cov_filter[k];
    row.cov_smoother = report.cov_smoother[k];
    row.p_filter = report.p_filter[k];
    row.p_smoother = report.p_smoother[k];
    append_mse_row(out, row);
  }
}

void write_mse_mc_csv(const EmpiricalMse& emp, const std::vector<Mat>& p_filter,
                      const std::vector<Mat>& p_smoother,
                      const std::string& path) {
  std::ofstream out = open_out(path);
  const int nx = static_cast<int>(emp.mse_filter[0].rows());
  mse_header(out, nx, true);
  for (int k = 0; k <= emp.last_index(); ++k) {
    out << k;
    std::vector<double> vals;
    vals.reserve(8 * nx);
    for (int i = 0; i < nx; ++i) {
      vals.push_back(sqrt_diag(emp.mse_filter[k], i));
      vals.push_back(sqrt_diag(emp.mse_smoother[k], i));
      vals.push_back(emp.mean_err_filter[k][i]);
      vals.push_back(emp.mean_err_smoother[k][i]);
      vals.push_back(sqrt_diag(p_filter[k], i));
      vals.push_back(sqrt_diag(p_smoother[k], i));
    }
    for (int i = 0; i < nx; ++i) {
      vals.push_back(emp.se_filter[k][i]);
      vals.push_back(emp.se_smoother[k][i]);
    }
    write_row_values(out, vals);
  }
}

void write_compare_csv(const ComparisonReport& rep, const std::string& path) {
  std::ofstream out = open_out(path);
  const int nx = static_cast<int>(rep.z_filter[0].size());
  out << "k";
  for (int i = 1; i <= nx; ++i) {
    out << ",z_filter_" << i << ",z_smoother_" << i << ",reldiff_filter_" << i
        << ",reldiff_smoother_" << i;
  }
  out << "\n";
  for (int k = 0; k <= rep.last_index(); ++k) {
    out << k;
    std::vector<double> vals;
    vals.reserve(4 * nx);
    for (int i = 0; i < nx; ++i) {
      vals.push_back(rep.z_filter[k][i]);
      vals.push_back(rep.z_smoother[k][i]);
      vals.push_back(rep.rel_diff_filter[k][i]);
      vals.push_back(rep.rel_diff_smoother[k][i]);
    }
    write_row_values(out, vals);
  }
}

int run_validate(const RunConfig& cfg, std::ostream& log) {
  BuiltScenario sc = build_scenario(cfg);
  ValidationReport rep = validate_scenario(sc.traj, sc.tm, sc.am);
  log << rep.to_string();
  if (rep.ok()) {
    log << "trajectory: K=" << sc.traj.last_index()
        << " n_x=" << sc.traj.state_dim() << "\n";
  }
  return rep.ok() ? 0 : 1;
}

int run_predict(const RunConfig& cfg, const RunOptions& opt,
                std::ostream& log) {
  const fs::path dir = ensure_out_dir(opt);
  BuiltScenario sc = build_scenario(cfg);
  const bool full = opt.full_matrices || cfg.emit.full_matrices;
  fs::path full_dir = dir / "mse_full";
  if (full) {
    fs::create_directories(full_dir);
  }

  Timing timing;
  if (opt.stream) {
    // Constant-memory forward sweep; rows go straight to disk.
    std::ofstream out = open_out(dir / "mse.csv");
    mse_header(out, sc.traj.state_dim(), false);
    const double secs = timed([&] {
      predict_mse_stream(sc.traj, sc.tm, sc.am, [&](const MseRow& row) {
        append_mse_row(out, row);
        if (full) {
          write_full_matrices(row, full_dir);
        }
      });
    });
    timing.note("predict_stream", secs);
  } else {
    MseReport report;
    const double secs =
        timed([&] { report = predict_mse(sc.traj, sc.tm, sc.am); });
    timing.note("predict", secs);
    if (cfg.emit.mse_csv) {
      write_mse_csv(report, (dir / "mse.csv").string());
    }
    if (full) {
      for (int k = 0; k <= report.last_index(); ++k) {
        MseRow row;
        row.k = k;
        row.mse_filter = report.mse_filter[k];
        row.mse_smoother = report.mse_smoother[k];
        row.bias_filter = report.bias_filter[k];
        row.bias_smoother = report.bias_smoother[k];
        row.cov_filter = report.cov_filter[k];
        row.cov_smoother = report.cov_smoother[k];
        row.p_filter = report.p_filter[k];
        row.p_smoother = report.p_smoother[k];
        write_full_matrices(row, full_dir);
      }
    }
  }
  if (cfg.emit.timing) {
    timing.write(dir / "timing.csv");
  }
  log << "wrote " << (dir / "mse.csv").string() << "\n";
  return 0;
}

namespace {

// Assumed covariances for the Monte Carlo CSV: the filter covariance from
// the gains pass and the smoother covariance from the information-form
// combination (identical to the RTS covariance).
void assumed_covariances(const BuiltScenario& sc, std::vector<Mat>& p_filter,
                         std::vector<Mat>& p_smoother) {
  const int last = sc.traj.last_index();
  ReversedTimeModel rt = reversed_time_model(sc.am, last);
  ForwardPass fg = kf_forward_gains(sc.am, last);
  BackwardPass bg = kf_backward_gains(sc.am, rt);
  p_filter = fg.p_filt;
  p_smoother = two_filter_covariances(rt.moments, fg, bg);
}

}  // namespace

int run_montecarlo(const RunConfig& cfg, const RunOptions& opt,
                   std::ostream& log) {
  const fs::path dir = ensure_out_dir(opt);
  BuiltScenario sc = build_scenario(cfg);
  McConfig mc = resolve_mc_config(cfg, opt.runs_override, opt.seed_override);

  Timing timing;
  EmpiricalMse emp;
  const double secs =
      timed([&] { emp = empirical_mse(sc.traj, sc.tm, sc.am, mc); });
  timing.note("montecarlo", secs);

  std::vector<Mat> p_filter, p_smoother;
  assumed_covariances(sc, p_filter, p_smoother);
  write_mse_mc_csv(emp, p_filter, p_smoother, (dir / "mse_mc.csv").string());
  if (cfg.emit.timing) {
    timing.write(dir / "timing.csv");
  }
  log << "wrote " << (dir / "mse_mc.csv").string() << " (runs=" << emp.n_runs
      << ", seed=" << mc.seed << ")\n";
  return 0;
}

int run_compare(const RunConfig& cfg, const RunOptions& opt,
                std::ostream& log) {
  const fs::path dir = ensure_out_dir(opt);
  BuiltScenario sc = build_scenario(cfg);
  McConfig mc = resolve_mc_config(cfg, opt.runs_override, opt.seed_override);

  Timing timing;
  MseReport report;
  timing.note("predict",
              timed([&] { report = predict_mse(sc.traj, sc.tm, sc.am); }));
  EmpiricalMse emp;
  timing.note("montecarlo",
              timed([&] { emp = empirical_mse(sc.traj, sc.tm, sc.am, mc); }));
  ComparisonReport cmp = compare(report, emp, opt.z_threshold);

  if (cfg.emit.mse_csv) {
    write_mse_csv(report, (dir / "mse.csv").string());
    std::vector<Mat> p_filter, p_smoother;
    assumed_covariances(sc, p_filter, p_smoother);
    write_mse_mc_csv(emp, p_filter, p_smoother, (dir / "mse_mc.csv").string());
  }
  if (cfg.emit.comparison) {
    write_compare_csv(cmp, (dir / "compare.csv").string());
  }
  if (cfg.emit.timing) {
    timing.write(dir / "timing.csv");
  }
  log << "max |z| = " << cmp.max_abs_z << " (threshold " << cmp.z_threshold
      << (opt.strict ? ", strict" : "") << ")\n";
  if (opt.strict && !cmp.pass) {
    log << "strict gate failed\n";
    return 1;
  }
  return 0;
}

int run_bench(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const fs::path dir = ensure_out_dir(opt);
  if (opt.bench_k.empty()) {
    throw ConfigError("bench: at least one horizon is required (--K)");
  }
  auto [am, tm] = build_models(cfg);

  std::ofstream out = open_out(dir / "bench.csv");
  out << "K,t_predict_seconds,t_mc_seconds,ratio\n";
  std::vector<double> ks, ts;
  std::optional<McConfig> mc;
  if (cfg.mc || opt.runs_override) {
    mc = resolve_mc_config(cfg, opt.runs_override, opt.seed_override);
  }
  for (int k_last : opt.bench_k) {
    Trajectory traj = build_trajectory_for(cfg, k_last);
    double t_predict = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
      MseReport report;
      t_predict = std::min(
          t_predict, timed([&] { report = predict_mse(traj, tm, am); }));
    }
    const bool time_mc =
        mc && (opt.bench_mc_k.empty() ||
               std::find(opt.bench_mc_k.begin(), opt.bench_mc_k.end(),
                         k_last) != opt.bench_mc_k.end());
    double t_mc = 0.0;  // 0 marks "not measured"
    if (time_mc) {
      EmpiricalMse emp;
      t_mc = timed([&] { emp = empirical_mse(traj, tm, am, *mc); });
    }
    const double ratio = time_mc && t_predict > 0.0 ? t_mc / t_predict : 0.0;
    out << k_last << ',' << format_double(t_predict) << ','
        << format_double(t_mc) << ',' << format_double(ratio) << "\n";
    log << "K=" << k_last << " predict " << t_predict << " s";
    if (time_mc) {
      log << ", mc " << t_mc << " s, ratio " << ratio;
    }
    log << "\n";
    ks.push_back(static_cast<double>(k_last));
    ts.push_back(t_predict);
  }
  if (ks.size() >= 2) {
    LinearFit fit = fit_line(ks, ts);
    std::ofstream fout = open_out(dir / "bench_fit.csv");
    fout << "slope_seconds_per_step,intercept_seconds,r_squared\n";
    fout << format_double(fit.slope) << ',' << format_double(fit.intercept)
         << ',' << format_double(fit.r_squared) << "\n";
    log << "linear fit: slope " << fit.slope << " s/step, R^2 "
        << fit.r_squared << "\n";
  }
  return 0;
}

int run_gen_trajectory(const RunConfig& cfg, const RunOptions& opt,
                       std::ostream& log) {
  const fs::path dir = ensure_out_dir(opt);
  BuiltScenario sc = build_scenario(cfg);
  const fs::path path = dir / "trajectory.csv";
  save_trajectory_csv(sc.traj, path.string());
  log << "wrote " << path.string() << " (K=" << sc.traj.last_index() << ")\n";
  return 0;
}

}  // namespace kfmse::runner
