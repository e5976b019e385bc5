#pragma once

#include <string>
#include <vector>

#include "kfmse/matrix.hpp"

namespace kfmse {

/// Fixed deterministic state sequence x_0 ... x_K the estimators are judged
/// against. The trajectory is data, not a realization of the assumed model.
struct Trajectory {
  std::vector<Vec> states;

  /// Validates: non-empty, uniform dimension, all entries finite.
  static Trajectory from_states(std::vector<Vec> states);

  int state_dim() const { return static_cast<int>(states.front().size()); }
  int last_index() const { return static_cast<int>(states.size()) - 1; }
};

/// Distribution family of the true measurement noise. All families are
/// zero mean and are scaled at sampling time so their covariance is exactly
/// the configured true covariance.
enum class NoiseFamily {
  kGaussian,
  kUniformScaled,
  kStudentTScaled,
};

/// The real data-generating measurement model: y_k = h_bar * x_k + noise.
/// r_bar must be symmetric PSD; sampling additionally requires it PD.
struct TrueMeasModel {
  Mat h_bar;
  Mat r_bar;
  NoiseFamily noise_family = NoiseFamily::kGaussian;
  double student_t_dof = 5.0;  // used by kStudentTScaled only, must be > 2

  int ny() const { return static_cast<int>(h_bar.rows()); }
  int nx() const { return static_cast<int>(h_bar.cols()); }
};

/// The estimator's linear-Gaussian state-space model. Time-invariant.
struct AssumedModel {
  Mat f;          // state transition, n_x x n_x
  Mat q;          // process noise covariance, symmetric PSD
  Mat h;          // measurement matrix, n_y x n_x
  SymPd r;        // measurement noise covariance, PD
  Vec mu0;        // prior mean
  SymPd sigma0;   // prior covariance, PD

  /// Cross-checks dimensions, symmetry and PSD-ness of q. Throws
  /// DimensionMismatch / NotSymmetric / NotPositiveDefinite / SchurNegative.
  static AssumedModel make(Mat f, Mat q, Mat h, Mat r, Vec mu0, Mat sigma0);

  int nx() const { return static_cast<int>(f.rows()); }
  int ny() const { return static_cast<int>(h.rows()); }
};

/// Marginal moments mu_k, Sigma_k of the assumed model's prior process.
struct MarginalMoments {
  std::vector<Vec> mu;
  std::vector<Mat> sigma;  // each PD

  int last_index() const { return static_cast<int>(mu.size()) - 1; }
};

/// Backward Markov model sample-path equivalent to the assumed forward
/// process. f_b[k] and q_b[k] map step k+1 to step k, for k = 0 .. K-1.
struct ReversedTimeModel {
  std::vector<Mat> f_b;
  std::vector<Mat> q_b;  // symmetric PSD
  MarginalMoments moments;

  int last_index() const { return moments.last_index(); }
};

/// mu_k = F mu_{k-1}, Sigma_k = F Sigma_{k-1} F^T + Q, k = 1 .. last_index.
/// Every Sigma_k is symmetrized and must be PD (the reversed-time
/// construction and the two-filter combination invert it).
MarginalMoments marginal_moments(const AssumedModel& m, int last_index);

/// f_b[k] = Sigma_k F^T Sigma_{k+1}^{-1} and
/// q_b[k] = Sigma_k - Sigma_k F^T Sigma_{k+1}^{-1} F Sigma_k.
/// q_b is a Schur complement and must pass the PSD probe; failures raise
/// SchurNegative.
ReversedTimeModel reversed_time_model(const AssumedModel& m, int last_index);

struct ValidationIssue {
  std::string code;    // e.g. "DimensionMismatch", "NotPsd", "NonFinite"
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

/// Report-based cross-checks of a full scenario: dimension consistency
/// between trajectory and both models, finiteness, symmetry/PSD of the true
/// noise covariance. Never throws; every violation becomes an issue entry.
ValidationReport validate_scenario(const Trajectory& t, const TrueMeasModel& tm,
                                   const AssumedModel& am);

}  // namespace kfmse
