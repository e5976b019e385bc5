#include "kfmse/mse.hpp"

#include <string>

namespace kfmse {
namespace {

void check_lengths(const char* who, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ShapeMismatch(std::string(who) + ": sequence length " +
                        std::to_string(got) + ", expected " +
                        std::to_string(want));
  }
}

// Single steps shared by the standalone recursions and the streaming
// pipeline; each formula lives in exactly one place.

Vec fwd_bias_predict(const AssumedModel& am, const MismatchSequences& ms,
                     const Vec& b_prev, int k) {
  if (k == 0) {
    return ms.b_prior[0];
  }
  return am.f * b_prev - ms.w_tilde[k - 1];
}

Vec bias_update(const AssumedModel& am, const Mat& gain, const Vec& b_pred,
                const Vec& v_tilde_k) {
  return b_pred + gain * (v_tilde_k - am.h * b_pred);
}

Vec bwd_bias_predict(const ReversedTimeModel& rt, const MismatchSequences& ms,
                     const Vec& b_next, int k, bool last) {
  if (last) {
    return ms.b_prior.back();
  }
  return ms.b_prior[k] + rt.f_b[k] * (b_next - ms.b_prior[k + 1]);
}

Mat cov_update(const AssumedModel& am, const TrueMeasModel& tm,
               const Mat& gain, const Mat& c_pred) {
  Mat i_kh = Mat::Identity(am.nx(), am.nx()) - gain * am.h;
  return symmetrize(i_kh * c_pred * i_kh.transpose() +
                    gain * tm.r_bar * gain.transpose());
}

Mat fwd_cov_predict(const AssumedModel& am, const Mat& c_prev, int k) {
  if (k == 0) {
    return Mat::Zero(am.nx(), am.nx());
  }
  return am.f * c_prev * am.f.transpose();
}

Mat bwd_cov_predict(const AssumedModel& am, const ReversedTimeModel& rt,
                    const Mat& c_next, int k, bool last) {
  if (last) {
    return Mat::Zero(am.nx(), am.nx());
  }
  return rt.f_b[k] * c_next * rt.f_b[k].transpose();
}

Vec combine_vec(const detail::CombineStep& c, const Vec& fwd, const Vec& bwd,
                const Vec& prior) {
  return c.p_smooth *
         (c.info_fwd * fwd + c.info_bwd * bwd - c.info_prior * prior);
}

Mat combine_cov(const detail::CombineStep& c, const Mat& c_fwd,
                const Mat& c_bwd) {
  return symmetrize(c.p_smooth *
                    (c.info_fwd * c_fwd * c.info_fwd +
                     c.info_bwd * c_bwd * c.info_bwd) *
                    c.p_smooth);
}

void check_true_model(const TrueMeasModel& tm, const AssumedModel& am) {
  if (tm.nx() != am.nx() || tm.ny() != am.ny()) {
    throw DimensionMismatch("true measurement model dimensions do not match "
                            "the assumed model");
  }
  if (tm.r_bar.rows() != tm.ny() || tm.r_bar.cols() != tm.ny()) {
    throw DimensionMismatch("true noise covariance must be n_y x n_y");
  }
}

}  // namespace

MismatchSequences mismatch_sequences(const Trajectory& t,
                                     const TrueMeasModel& tm,
                                     const AssumedModel& am,
                                     const MarginalMoments& mm) {
  const int last = t.last_index();
  if (t.state_dim() != am.nx()) {
    throw DimensionMismatch("mismatch_sequences: trajectory dimension " +
                            std::to_string(t.state_dim()) +
                            " vs model n_x " + std::to_string(am.nx()));
  }
  check_true_model(tm, am);
  check_lengths("mismatch_sequences: marginal moments", mm.mu.size(),
                t.states.size());

  MismatchSequences ms;
  ms.w_tilde.reserve(last);
  ms.v_tilde.reserve(last + 1);
  ms.b_prior.reserve(last + 1);
  ms.y_bar.reserve(last + 1);
  const Mat h_diff = tm.h_bar - am.h;
  for (int k = 0; k <= last; ++k) {
    if (k >= 1) {
      ms.w_tilde.push_back(t.states[k] - am.f * t.states[k - 1]);
    }
    ms.v_tilde.push_back(h_diff * t.states[k]);
    ms.b_prior.push_back(mm.mu[k] - t.states[k]);
    ms.y_bar.push_back(tm.h_bar * t.states[k]);
  }
  return ms;
}

std::vector<Vec> bias_forward(const AssumedModel& am, const ForwardPass& gains,
                              const MismatchSequences& ms) {
  const int last = gains.last_index();
  check_lengths("bias_forward", ms.v_tilde.size(), last + 1);
  std::vector<Vec> b;
  b.reserve(last + 1);
  for (int k = 0; k <= last; ++k) {
    Vec pred = fwd_bias_predict(am, ms, k == 0 ? Vec() : b.back(), k);
    b.push_back(bias_update(am, gains.gain[k], pred, ms.v_tilde[k]));
  }
  return b;
}

BackwardBias bias_backward(const AssumedModel& am, const ReversedTimeModel& rt,
                           const BackwardPass& gains,
                           const MismatchSequences& ms) {
  const int last = gains.last_index();
  check_lengths("bias_backward", ms.b_prior.size(), last + 1);
  BackwardBias out;
  out.predicted.resize(last + 1);
  out.filtered.resize(last + 1);
  for (int k = last; k >= 0; --k) {
    const bool anchor = (k == last);
    out.predicted[k] = bwd_bias_predict(
        rt, ms, anchor ? Vec() : out.filtered[k + 1], k, anchor);
    out.filtered[k] =
        bias_update(am, gains.gain[k], out.predicted[k], ms.v_tilde[k]);
  }
  return out;
}

std::vector<Vec> bias_combine(const MarginalMoments& mm, const ForwardPass& f,
                              const BackwardPass& b,
                              const std::vector<Vec>& bias_fwd,
                              const std::vector<Vec>& bias_bwd_predicted,
                              const MismatchSequences& ms) {
  const int last = mm.last_index();
  check_lengths("bias_combine", bias_fwd.size(), last + 1);
  check_lengths("bias_combine", bias_bwd_predicted.size(), last + 1);
  std::vector<Vec> out(last + 1);
  for (int k = 0; k <= last; ++k) {
    detail::CombineStep c =
        detail::combine_step(f.p_filt[k], b.p_pred[k], mm.sigma[k], k);
    out[k] = combine_vec(c, bias_fwd[k], bias_bwd_predicted[k], ms.b_prior[k]);
  }
  return out;
}

std::vector<Mat> cov_forward(const AssumedModel& am, const TrueMeasModel& tm,
                             const ForwardPass& gains) {
  check_true_model(tm, am);
  const int last = gains.last_index();
  std::vector<Mat> c;
  c.reserve(last + 1);
  for (int k = 0; k <= last; ++k) {
    Mat pred = fwd_cov_predict(am, k == 0 ? Mat() : c.back(), k);
    c.push_back(cov_update(am, tm, gains.gain[k], pred));
  }
  return c;
}

BackwardCov cov_backward(const AssumedModel& am, const TrueMeasModel& tm,
                         const ReversedTimeModel& rt,
                         const BackwardPass& gains) {
  check_true_model(tm, am);
  const int last = gains.last_index();
  BackwardCov out;
  out.predicted.resize(last + 1);
  out.filtered.resize(last + 1);
  for (int k = last; k >= 0; --k) {
    const bool anchor = (k == last);
    out.predicted[k] = bwd_cov_predict(
        am, rt, anchor ? Mat() : out.filtered[k + 1], k, anchor);
    out.filtered[k] = cov_update(am, tm, gains.gain[k], out.predicted[k]);
  }
  return out;
}

std::vector<Mat> cov_combine(const MarginalMoments& mm, const ForwardPass& f,
                             const BackwardPass& b,
                             const std::vector<Mat>& cov_fwd,
                             const std::vector<Mat>& cov_bwd_predicted) {
  const int last = mm.last_index();
  check_lengths("cov_combine", cov_fwd.size(), last + 1);
  check_lengths("cov_combine", cov_bwd_predicted.size(), last + 1);
  std::vector<Mat> out(last + 1);
  for (int k = 0; k <= last; ++k) {
    detail::CombineStep c =
        detail::combine_step(f.p_filt[k], b.p_pred[k], mm.sigma[k], k);
    out[k] = combine_cov(c, cov_fwd[k], cov_bwd_predicted[k]);
  }
  return out;
}

ErrorSequences error_propagate(const AssumedModel& am,
                               const ReversedTimeModel& rt,
                               const ForwardPass& f, const BackwardPass& b,
                               const std::vector<Vec>& noise) {
  const int last = rt.last_index();
  check_lengths("error_propagate", noise.size(), last + 1);
  ErrorSequences out;
  out.forward.reserve(last + 1);
  out.backward_predicted.resize(last + 1);
  out.backward.resize(last + 1);
  out.smoothed.resize(last + 1);

  const Vec zero = Vec::Zero(am.nx());
  for (int k = 0; k <= last; ++k) {
    Vec pred = (k == 0) ? zero : Vec(am.f * out.forward.back());
    out.forward.push_back(pred + f.gain[k] * (noise[k] - am.h * pred));
  }
  for (int k = last; k >= 0; --k) {
    out.backward_predicted[k] =
        (k == last) ? zero : Vec(rt.f_b[k] * out.backward[k + 1]);
    out.backward[k] = out.backward_predicted[k] +
                      b.gain[k] * (noise[k] - am.h * out.backward_predicted[k]);
  }
  for (int k = 0; k <= last; ++k) {
    detail::CombineStep c = detail::combine_step(f.p_filt[k], b.p_pred[k],
                                                 rt.moments.sigma[k], k);
    out.smoothed[k] = c.p_smooth * (c.info_fwd * out.forward[k] +
                                    c.info_bwd * out.backward_predicted[k]);
  }
  return out;
}

namespace {

MseRow assemble_row(int k, const Vec& b_f, const Vec& b_s, const Mat& c_f,
                    const Mat& c_s, const Mat& p_f, const Mat& p_s) {
  MseRow row;
  row.k = k;
  row.mse_filter = c_f + b_f * b_f.transpose();
  row.mse_smoother = c_s + b_s * b_s.transpose();
  row.bias_filter = b_f;
  row.bias_smoother = b_s;
  row.cov_filter = c_f;
  row.cov_smoother = c_s;
  row.p_filter = p_f;
  row.p_smoother = p_s;
  return row;
}

void require_valid(const Trajectory& t, const TrueMeasModel& tm,
                   const AssumedModel& am) {
  ValidationReport rep = validate_scenario(t, tm, am);
  if (!rep.ok()) {
    throw DimensionMismatch("invalid scenario:\n" + rep.to_string());
  }
}

}  // namespace

void predict_mse_stream(const Trajectory& t, const TrueMeasModel& tm,
                        const AssumedModel& am,
                        const std::function<void(const MseRow&)>& emit) {
  require_valid(t, tm, am);
  const int last = t.last_index();
  ReversedTimeModel rt = reversed_time_model(am, last);
  MismatchSequences ms = mismatch_sequences(t, tm, am, rt.moments);

  // Backward sweep, storing only the predicted quantities the combination
  // consumes at each step.
  std::vector<Mat> p_pred_b(last + 1), c_bwd_pred(last + 1);
  std::vector<Vec> b_bwd_pred(last + 1);
  {
    Mat p_filt_b, c_filt_b;
    Vec b_filt_b;
    for (int k = last; k >= 0; --k) {
      const bool anchor = (k == last);
      detail::GainStep g = detail::backward_gain_step(am, rt, p_filt_b, k, anchor);
      b_bwd_pred[k] = bwd_bias_predict(rt, ms, b_filt_b, k, anchor);
      c_bwd_pred[k] = bwd_cov_predict(am, rt, c_filt_b, k, anchor);
      b_filt_b = bias_update(am, g.gain, b_bwd_pred[k], ms.v_tilde[k]);
      c_filt_b = cov_update(am, tm, g.gain, c_bwd_pred[k]);
      p_filt_b = std::move(g.p_filt);
      p_pred_b[k] = std::move(g.p_pred);
    }
  }

  // Forward sweep with O(n_x^2) rolling state; one row out per step.
  Mat p_filt, c_filt;
  Vec b_filt;
  for (int k = 0; k <= last; ++k) {
    detail::GainStep g = detail::forward_gain_step(am, p_filt, k == 0);
    Vec b_pred = fwd_bias_predict(am, ms, b_filt, k);
    Mat c_pred = fwd_cov_predict(am, c_filt, k);
    b_filt = bias_update(am, g.gain, b_pred, ms.v_tilde[k]);
    c_filt = cov_update(am, tm, g.gain, c_pred);
    p_filt = std::move(g.p_filt);

    detail::CombineStep c =
        detail::combine_step(p_filt, p_pred_b[k], rt.moments.sigma[k], k);
    Vec b_smooth = combine_vec(c, b_filt, b_bwd_pred[k], ms.b_prior[k]);
    Mat c_smooth = combine_cov(c, c_filt, c_bwd_pred[k]);
    emit(assemble_row(k, b_filt, b_smooth, c_filt, c_smooth, p_filt,
                      c.p_smooth));
  }
}

MsePredictorState mse_sufficient_statistics(const Trajectory& t,
                                            const TrueMeasModel& tm,
                                            const AssumedModel& am) {
  require_valid(t, tm, am);
  const int last = t.last_index();
  ReversedTimeModel rt = reversed_time_model(am, last);
  ForwardPass fg = kf_forward_gains(am, last);
  BackwardPass bg = kf_backward_gains(am, rt);
  MismatchSequences ms = mismatch_sequences(t, tm, am, rt.moments);

  MsePredictorState st;
  st.b_fwd = bias_forward(am, fg, ms);
  BackwardBias bb = bias_backward(am, rt, bg, ms);
  st.c_fwd = cov_forward(am, tm, fg);
  BackwardCov bc = cov_backward(am, tm, rt, bg);
  st.b_smooth = bias_combine(rt.moments, fg, bg, st.b_fwd, bb.predicted, ms);
  st.c_smooth = cov_combine(rt.moments, fg, bg, st.c_fwd, bc.predicted);
  st.b_bwd_pred = std::move(bb.predicted);
  st.b_bwd = std::move(bb.filtered);
  st.c_bwd_pred = std::move(bc.predicted);
  st.c_bwd = std::move(bc.filtered);
  return st;
}

MseReport predict_mse(const Trajectory& t, const TrueMeasModel& tm,
                      const AssumedModel& am) {
  MseReport rep;
  const int n = t.last_index() + 1;
  rep.mse_filter.reserve(n);
  rep.mse_smoother.reserve(n);
  rep.bias_filter.reserve(n);
  rep.bias_smoother.reserve(n);
  rep.cov_filter.reserve(n);
  rep.cov_smoother.reserve(n);
  rep.p_filter.reserve(n);
  rep.p_smoother.reserve(n);
  predict_mse_stream(t, tm, am, [&rep](const MseRow& row) {
    rep.mse_filter.push_back(row.mse_filter);
    rep.mse_smoother.push_back(row.mse_smoother);
    rep.bias_filter.push_back(row.bias_filter);
    rep.bias_smoother.push_back(row.bias_smoother);
    rep.cov_filter.push_back(row.cov_filter);
    rep.cov_smoother.push_back(row.cov_smoother);
    rep.p_filter.push_back(row.p_filter);
    rep.p_smoother.push_back(row.p_smoother);
  });
  return rep;
}

}  // namespace kfmse
