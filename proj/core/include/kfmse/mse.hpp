#pragma once

#include <functional>
#include <vector>

#include "kfmse/kalman.hpp"

// Exact MSE prediction for the mismatched Kalman filter and smoother on a
// fixed deterministic trajectory. The estimator error splits into a
// deterministic bias b (the estimate under noiseless measurements minus the
// true state) and a noise covariance C (driven purely by the true
// measurement noise through the gains), giving MSE = C + b b^T at every
// step. Both parts obey linear recursions in the trajectory length, so the
// whole report costs O(K n_x^3) instead of a Monte Carlo study.

namespace kfmse {

/// Deterministic mismatch drivers derived from the trajectory and the two
/// measurement models.
struct MismatchSequences {
  /// w_tilde[k-1] = x_k - F x_{k-1} for k = 1 .. K: the state-equation
  /// mismatch (zero when the trajectory follows the assumed dynamics).
  std::vector<Vec> w_tilde;
  /// v_tilde[k] = (H_true - H) x_k for k = 0 .. K.
  std::vector<Vec> v_tilde;
  /// b_prior[k] = mu_k - x_k for k = 0 .. K: bias of the marginal mean.
  std::vector<Vec> b_prior;
  /// y_bar[k] = H_true x_k: the noiseless measurement sequence.
  std::vector<Vec> y_bar;
};

MismatchSequences mismatch_sequences(const Trajectory& t,
                                     const TrueMeasModel& tm,
                                     const AssumedModel& am,
                                     const MarginalMoments& mm);

/// Forward bias recursion: b_{k|0:k} = b_pred + K_k (v_tilde_k - H b_pred)
/// with b_pred = F b_{k-1|0:k-1} - w_tilde_k (the prior bias b_0 at k = 0).
/// Equals kf_forward(am, y_bar).x_filt[k] - x_k by construction.
std::vector<Vec> bias_forward(const AssumedModel& am, const ForwardPass& gains,
                              const MismatchSequences& ms);

struct BackwardBias {
  std::vector<Vec> predicted;  // b_{k|k+1:K}; b_prior[K] at k = K
  std::vector<Vec> filtered;   // b_{k|k:K}
};

/// Reversed-time bias recursion, anchored at the prior bias b_K.
BackwardBias bias_backward(const AssumedModel& am, const ReversedTimeModel& rt,
                           const BackwardPass& gains,
                           const MismatchSequences& ms);

/// Smoothed bias: b_{k|0:K} =
///   P_{k|0:K} (P_f^-1 b_fwd + P_b^-1 b_bwd_pred - Sigma_k^-1 b_prior).
std::vector<Vec> bias_combine(const MarginalMoments& mm, const ForwardPass& f,
                              const BackwardPass& b,
                              const std::vector<Vec>& bias_fwd,
                              const std::vector<Vec>& bias_bwd_predicted,
                              const MismatchSequences& ms);

/// Forward noise-covariance recursion:
///   C_{k|0:k} = (I - K H) C_pred (I - K H)^T + K R_true K^T
/// with C_pred = F C_{k-1|0:k-1} F^T and zero at k = 0. No +Q term: the
/// trajectory is deterministic, so only measurement noise enters.
std::vector<Mat> cov_forward(const AssumedModel& am, const TrueMeasModel& tm,
                             const ForwardPass& gains);

struct BackwardCov {
  std::vector<Mat> predicted;  // C_{k|k+1:K}; zero at k = K
  std::vector<Mat> filtered;   // C_{k|k:K}
};

/// Reversed-time noise-covariance recursion, anchored at zero.
BackwardCov cov_backward(const AssumedModel& am, const TrueMeasModel& tm,
                         const ReversedTimeModel& rt,
                         const BackwardPass& gains);

/// Smoothed covariance term:
///   C_{k|0:K} = P (P_f^-1 C_f P_f^-1 + P_b^-1 C_b P_b^-1) P
/// with P = P_{k|0:K}.
std::vector<Mat> cov_combine(const MarginalMoments& mm, const ForwardPass& f,
                             const BackwardPass& b,
                             const std::vector<Mat>& cov_fwd,
                             const std::vector<Mat>& cov_bwd_predicted);

/// Error responses of filter, reversed-time filter and smoother to one
/// concrete noise realization. Not needed to compute the MSE; used to pin
/// the covariance recursions against brute-force sensitivity checks.
struct ErrorSequences {
  std::vector<Vec> forward;             // e_{k|0:k}
  std::vector<Vec> backward_predicted;  // e_{k|k+1:K}
  std::vector<Vec> backward;            // e_{k|k:K}
  std::vector<Vec> smoothed;            // e_{k|0:K}
};

ErrorSequences error_propagate(const AssumedModel& am,
                               const ReversedTimeModel& rt,
                               const ForwardPass& f, const BackwardPass& b,
                               const std::vector<Vec>& noise);

/// Full per-step record of the bias and covariance sufficient statistics.
struct MsePredictorState {
  std::vector<Vec> b_fwd, b_bwd_pred, b_bwd, b_smooth;
  std::vector<Mat> c_fwd, c_bwd_pred, c_bwd, c_smooth;
};

MsePredictorState mse_sufficient_statistics(const Trajectory& t,
                                            const TrueMeasModel& tm,
                                            const AssumedModel& am);

/// Per-step MSE report. mse = cov + bias bias^T holds exactly by
/// construction; p_filter / p_smoother are the covariances the estimator
/// itself reports, which under mismatch no longer match the MSE.
struct MseReport {
  std::vector<Mat> mse_filter;    // MSE_{k|k}
  std::vector<Mat> mse_smoother;  // MSE_{k|K}
  std::vector<Vec> bias_filter;
  std::vector<Vec> bias_smoother;
  std::vector<Mat> cov_filter;
  std::vector<Mat> cov_smoother;
  std::vector<Mat> p_filter;
  std::vector<Mat> p_smoother;

  int last_index() const { return static_cast<int>(mse_filter.size()) - 1; }
};

/// One report row, used by the streaming emitter.
struct MseRow {
  int k = 0;
  Mat mse_filter, mse_smoother;
  Vec bias_filter, bias_smoother;
  Mat cov_filter, cov_smoother;
  Mat p_filter, p_smoother;
};

/// Computes the full analytical MSE report in O(K n_x^3) time. Never looks
/// at measurements: gains come from covariance-only passes and the biases
/// from the trajectory alone.
MseReport predict_mse(const Trajectory& t, const TrueMeasModel& tm,
                      const AssumedModel& am);

/// Streaming variant: emits rows in increasing k while keeping only the
/// forward recursion state. The reversed-time pass is still stored (the
/// combination needs backward quantities at every step), so memory is one
/// backward sweep instead of the whole report.
void predict_mse_stream(const Trajectory& t, const TrueMeasModel& tm,
                        const AssumedModel& am,
                        const std::function<void(const MseRow&)>& emit);

}  // namespace kfmse
