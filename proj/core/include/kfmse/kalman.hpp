#pragma once

#include <vector>

#include "kfmse/models.hpp"

namespace kfmse {

/// Forward Kalman filter pass over k = 0 .. K. Covariances, innovation
/// covariances and gains are always present; the state sequences are empty
/// when the pass was produced by kf_forward_gains (gains depend only on the
/// model, never on measurements).
struct ForwardPass {
  std::vector<Vec> x_pred;     // x_{k|k-1}; the prior mean at k = 0
  std::vector<Vec> x_filt;     // x_{k|k}
  std::vector<Mat> p_pred;     // P_{k|k-1}; the prior covariance at k = 0
  std::vector<Mat> p_filt;     // P_{k|k}
  std::vector<Mat> gain;       // K_k
  std::vector<Mat> innov_cov;  // S_k

  int last_index() const { return static_cast<int>(p_filt.size()) - 1; }
  bool has_states() const { return !x_filt.empty(); }
};

/// Reversed-time Kalman filter pass, indexed by k = 0 .. K but filled from
/// k = K down to 0. The "predicted" quantities condition on measurements
/// k+1 .. K; at k = K they are the marginal anchor (mu_K, Sigma_K).
struct BackwardPass {
  std::vector<Vec> x_pred;     // x_{k|k+1:K}
  std::vector<Vec> x_filt;     // x_{k|k:K}
  std::vector<Mat> p_pred;     // P_{k|k+1:K}
  std::vector<Mat> p_filt;     // P_{k|k:K}
  std::vector<Mat> gain;       // K_{k|k+1:K}
  std::vector<Mat> innov_cov;  // S_{k|k+1:K}

  int last_index() const { return static_cast<int>(p_filt.size()) - 1; }
  bool has_states() const { return !x_filt.empty(); }
};

enum class SmootherMethod { kRts, kTwoFilter };

struct SmoothedPass {
  std::vector<Vec> x;  // x_{k|K}
  std::vector<Mat> p;  // P_{k|K}
  SmootherMethod method = SmootherMethod::kRts;

  int last_index() const { return static_cast<int>(p.size()) - 1; }
};

/// Covariance-only forward pass: P_{k|k-1}, S_k, K_k, P_{k|k} for
/// k = 0 .. last_index. Covariance updates use the Joseph form and are
/// symmetrized each step.
ForwardPass kf_forward_gains(const AssumedModel& m, int last_index);

/// Full forward filter over the measurement sequence y_0 .. y_K.
/// The prediction at k = 0 is the prior (mu0, Sigma0).
ForwardPass kf_forward(const AssumedModel& m, const std::vector<Vec>& y);

/// RTS backward recursion seeded with (x_{K|K}, P_{K|K}).
SmoothedPass rts_smooth(const AssumedModel& m, const ForwardPass& f);

/// Covariance-only reversed-time pass (anchored at (mu_K, Sigma_K)).
BackwardPass kf_backward_gains(const AssumedModel& m,
                               const ReversedTimeModel& rt);

/// Full reversed-time filter over y_0 .. y_K, running k = K down to 0.
BackwardPass kf_backward(const AssumedModel& m, const ReversedTimeModel& rt,
                         const std::vector<Vec>& y);

/// Smoothed covariances P_{k|0:K} from the information-form combination
///   P_{k|0:K} = (P_{k|0:k}^-1 + P_{k|k+1:K}^-1 - Sigma_k^-1)^-1,
/// usable with gains-only passes. Throws InformationNotPd when the
/// symmetrized information sum fails its Cholesky factorization.
std::vector<Mat> two_filter_covariances(const MarginalMoments& mm,
                                        const ForwardPass& f,
                                        const BackwardPass& b);

/// Modified two-filter smoother: fuses the forward filtered estimate with
/// the reversed-time predicted estimate, subtracting the prior information
/// Sigma_k^-1 so measurement y_k enters exactly once.
SmoothedPass two_filter_combine(const MarginalMoments& mm, const ForwardPass& f,
                                const BackwardPass& b);

namespace detail {

// Single covariance/gain step of the forward filter. Shared by the full
// passes and by the streaming MSE pipeline so there is exactly one
// implementation of the update.
struct GainStep {
  Mat p_pred;
  Mat innov_cov;
  Mat gain;
  Mat p_filt;
};

// first = true uses (prior covariance) as the prediction.
GainStep forward_gain_step(const AssumedModel& m, const Mat& p_filt_prev,
                           bool first);

// last = true anchors the prediction at Sigma_K.
GainStep backward_gain_step(const AssumedModel& m, const ReversedTimeModel& rt,
                            const Mat& p_filt_next, int k, bool last);

// Per-step information matrices of the two-filter combination.
struct CombineStep {
  Mat info_fwd;     // P_{k|0:k}^-1
  Mat info_bwd;     // P_{k|k+1:K}^-1
  Mat info_prior;   // Sigma_k^-1
  Mat p_smooth;     // (info_fwd + info_bwd - info_prior)^-1, symmetrized
};

CombineStep combine_step(const Mat& p_filt_fwd, const Mat& p_pred_bwd,
                         const Mat& sigma_k, int k);

}  // namespace detail

}  // namespace kfmse
