#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "kfmse/mse.hpp"

namespace kfmse {

/// Monte Carlo study configuration. Each run draws its measurement noise
/// from a substream derived from (seed, run index), so results are
/// reproducible and independent of how runs are scheduled across threads.
struct McConfig {
  long n_runs = 10000;
  std::uint64_t seed = 0;
  int parallel_width = 0;  // 0 selects hardware concurrency
};

/// Deterministic per-run random engine.
std::mt19937_64 make_run_engine(std::uint64_t seed, std::uint64_t run_index);

/// Draws y_k = H_true x_k + v_k with v_k zero mean, covariance exactly
/// R_true, from the configured noise family (unit-covariance draws colored
/// by the Cholesky factor of R_true). Requires R_true PD.
std::vector<Vec> sample_measurements(const Trajectory& t,
                                     const TrueMeasModel& tm,
                                     std::mt19937_64& rng);

/// Empirical MSE moments accumulated over Monte Carlo runs.
struct EmpiricalMse {
  std::vector<Mat> mse_filter;    // mean of (x_hat - x)(x_hat - x)^T
  std::vector<Mat> mse_smoother;
  std::vector<Vec> se_filter;     // standard error of each diagonal mean
  std::vector<Vec> se_smoother;
  std::vector<Vec> mean_err_filter;    // empirical bias
  std::vector<Vec> mean_err_smoother;
  long n_runs = 0;

  int last_index() const { return static_cast<int>(mse_filter.size()) - 1; }
};

/// Runs the full filter and RTS smoother on a fresh measurement realization
/// per run and accumulates squared errors in a single pass. Runs are
/// processed in fixed-size blocks merged in block order, so the result is
/// bit-identical for any parallel width.
EmpiricalMse empirical_mse(const Trajectory& t, const TrueMeasModel& tm,
                           const AssumedModel& am, const McConfig& cfg);

/// Per-step agreement between an analytical report and an empirical study.
struct ComparisonReport {
  std::vector<Vec> rel_diff_filter;  // |analytical - empirical| / max(|empirical|, floor)
  std::vector<Vec> rel_diff_smoother;
  std::vector<Vec> z_filter;         // (analytical - empirical) / max(SE, floor)
  std::vector<Vec> z_smoother;
  double max_abs_z = 0.0;
  double z_threshold = 4.0;
  bool pass = true;

  int last_index() const { return static_cast<int>(z_filter.size()) - 1; }
};

/// Compares MSE diagonals. Throws ShapeMismatch when the two inputs do not
/// cover the same steps and state dimension. Standard errors are floored at
/// 1e-15 so self-comparisons are well defined.
ComparisonReport compare(const MseReport& analytical,
                         const EmpiricalMse& empirical,
                         double z_threshold = 4.0);

}  // namespace kfmse
