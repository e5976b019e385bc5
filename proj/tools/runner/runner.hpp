#pragma once

#include <iosfwd>
#include <vector>

#include "runner/config.hpp"

namespace kfmse::runner {

struct RunOptions {
  std::string out_dir;
  bool full_matrices = false;
  bool stream = false;
  bool strict = false;
  double z_threshold = 4.0;
  std::optional<long> runs_override;
  std::optional<std::uint64_t> seed_override;
  std::vector<int> bench_k;     // horizons for the bench subcommand
  std::vector<int> bench_mc_k;  // subset of bench_k that also times the MC run
};

/// Fit of t = slope * K + intercept.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// CSV writers. All floats are emitted with 17 significant digits.
void write_mse_csv(const MseReport& report, const std::string& path);
void write_mse_mc_csv(const EmpiricalMse& emp, const std::vector<Mat>& p_filter,
                      const std::vector<Mat>& p_smoother,
                      const std::string& path);
void write_compare_csv(const ComparisonReport& rep, const std::string& path);

// Subcommand entry points; return the process exit status.
int run_validate(const RunConfig& cfg, std::ostream& log);
int run_predict(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int run_montecarlo(const RunConfig& cfg, const RunOptions& opt,
                   std::ostream& log);
int run_compare(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int run_bench(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int run_gen_trajectory(const RunConfig& cfg, const RunOptions& opt,
                       std::ostream& log);

}  // namespace kfmse::runner
