#include "kfmse/kalman.hpp"

#include <string>

namespace kfmse {
namespace detail {

GainStep forward_gain_step(const AssumedModel& m, const Mat& p_filt_prev,
                           bool first) {
  GainStep s;
  if (first) {
    s.p_pred = m.sigma0.mat();
  } else {
    s.p_pred = symmetrize(m.f * p_filt_prev * m.f.transpose() + m.q);
  }
  s.innov_cov = symmetrize(m.h * s.p_pred * m.h.transpose() + m.r.mat());
  CholeskyFactor chol_s = cholesky(s.innov_cov, "innovation covariance S_k");
  // K = P H^T S^-1 == (S^-1 H P)^T
  s.gain = chol_s.solve(m.h * s.p_pred).transpose();
  Mat i_kh = Mat::Identity(m.nx(), m.nx()) - s.gain * m.h;
  // Joseph form; equals P_pred - K S K^T at this gain but resists drift.
  s.p_filt = symmetrize(i_kh * s.p_pred * i_kh.transpose() +
                        s.gain * m.r.mat() * s.gain.transpose());
  return s;
}

GainStep backward_gain_step(const AssumedModel& m, const ReversedTimeModel& rt,
                            const Mat& p_filt_next, int k, bool last) {
  GainStep s;
  if (last) {
    s.p_pred = rt.moments.sigma.back();
  } else {
    const Mat& f_b = rt.f_b[k];
    s.p_pred = symmetrize(f_b * p_filt_next * f_b.transpose() + rt.q_b[k]);
  }
  s.innov_cov = symmetrize(m.h * s.p_pred * m.h.transpose() + m.r.mat());
  CholeskyFactor chol_s =
      cholesky(s.innov_cov, "reversed-time innovation covariance");
  s.gain = chol_s.solve(m.h * s.p_pred).transpose();
  Mat i_kh = Mat::Identity(m.nx(), m.nx()) - s.gain * m.h;
  s.p_filt = symmetrize(i_kh * s.p_pred * i_kh.transpose() +
                        s.gain * m.r.mat() * s.gain.transpose());
  return s;
}

CombineStep combine_step(const Mat& p_filt_fwd, const Mat& p_pred_bwd,
                         const Mat& sigma_k, int k) {
  CombineStep c;
  c.info_fwd = cholesky(p_filt_fwd, "forward filtered covariance").inverse();
  c.info_bwd = cholesky(p_pred_bwd, "backward predicted covariance").inverse();
  c.info_prior = cholesky(sigma_k, "marginal covariance Sigma_k").inverse();
  Mat info_sum = symmetrize(c.info_fwd + c.info_bwd - c.info_prior);
  try {
    c.p_smooth = symmetrize(cholesky(info_sum, "information sum").inverse());
  } catch (const NotPositiveDefinite&) {
    throw InformationNotPd(
        "two-filter combination: information sum not positive definite at k " +
        std::to_string(k));
  }
  return c;
}

}  // namespace detail

namespace {

void reserve_pass(ForwardPass& p, int n, bool with_states) {
  p.p_pred.reserve(n);
  p.p_filt.reserve(n);
  p.gain.reserve(n);
  p.innov_cov.reserve(n);
  if (with_states) {
    p.x_pred.reserve(n);
    p.x_filt.reserve(n);
  }
}

ForwardPass forward_impl(const AssumedModel& m, int last_index,
                         const std::vector<Vec>* y) {
  if (last_index < 0) {
    throw DimensionMismatch("forward pass: needs at least one step");
  }
  if (y) {
    for (const Vec& yk : *y) {
      if (yk.size() != m.ny()) {
        throw DimensionMismatch("forward pass: measurement dimension " +
                                std::to_string(yk.size()) + ", expected " +
                                std::to_string(m.ny()));
      }
    }
  }
  ForwardPass out;
  reserve_pass(out, last_index + 1, y != nullptr);
  for (int k = 0; k <= last_index; ++k) {
    detail::GainStep s = detail::forward_gain_step(
        m, k == 0 ? Mat() : out.p_filt.back(), k == 0);
    if (y) {
      Vec x_pred = (k == 0) ? m.mu0 : Vec(m.f * out.x_filt.back());
      Vec x_filt = x_pred + s.gain * ((*y)[k] - m.h * x_pred);
      out.x_pred.push_back(std::move(x_pred));
      out.x_filt.push_back(std::move(x_filt));
    }
    out.p_pred.push_back(std::move(s.p_pred));
    out.p_filt.push_back(std::move(s.p_filt));
    out.gain.push_back(std::move(s.gain));
    out.innov_cov.push_back(std::move(s.innov_cov));
  }
  return out;
}

BackwardPass backward_impl(const AssumedModel& m, const ReversedTimeModel& rt,
                           const std::vector<Vec>* y) {
  const int last = rt.last_index();
  if (y && static_cast<int>(y->size()) != last + 1) {
    throw DimensionMismatch(
        "backward pass: measurement count " + std::to_string(y->size()) +
        " does not match model horizon " + std::to_string(last + 1));
  }
  BackwardPass out;
  const int n = last + 1;
  out.p_pred.resize(n);
  out.p_filt.resize(n);
  out.gain.resize(n);
  out.innov_cov.resize(n);
  if (y) {
    out.x_pred.resize(n);
    out.x_filt.resize(n);
  }
  for (int k = last; k >= 0; --k) {
    const bool anchor = (k == last);
    detail::GainStep s = detail::backward_gain_step(
        m, rt, anchor ? Mat() : out.p_filt[k + 1], k, anchor);
    if (y) {
      Vec x_pred =
          anchor ? rt.moments.mu.back()
                 : Vec(rt.moments.mu[k] +
                       rt.f_b[k] * (out.x_filt[k + 1] - rt.moments.mu[k + 1]));
      out.x_filt[k] = x_pred + s.gain * ((*y)[k] - m.h * x_pred);
      out.x_pred[k] = std::move(x_pred);
    }
    out.p_pred[k] = std::move(s.p_pred);
    out.p_filt[k] = std::move(s.p_filt);
    out.gain[k] = std::move(s.gain);
    out.innov_cov[k] = std::move(s.innov_cov);
  }
  return out;
}

}  // namespace

ForwardPass kf_forward_gains(const AssumedModel& m, int last_index) {
  return forward_impl(m, last_index, nullptr);
}

ForwardPass kf_forward(const AssumedModel& m, const std::vector<Vec>& y) {
  if (y.empty()) {
    throw DimensionMismatch("kf_forward: empty measurement sequence");
  }
  return forward_impl(m, static_cast<int>(y.size()) - 1, &y);
}

SmoothedPass rts_smooth(const AssumedModel& m, const ForwardPass& f) {
  if (!f.has_states()) {
    throw DimensionMismatch("rts_smooth: forward pass lacks state estimates");
  }
  const int last = f.last_index();
  SmoothedPass out;
  out.method = SmootherMethod::kRts;
  out.x.resize(last + 1);
  out.p.resize(last + 1);
  out.x[last] = f.x_filt[last];
  out.p[last] = f.p_filt[last];
  for (int k = last - 1; k >= 0; --k) {
    CholeskyFactor chol_pred =
        cholesky(f.p_pred[k + 1], "predicted covariance P_{k+1|k}");
    // L = P_{k|k} F^T P_{k+1|k}^-1
    Mat l = chol_pred.solve(m.f * f.p_filt[k]).transpose();
    out.x[k] = f.x_filt[k] + l * (out.x[k + 1] - f.x_pred[k + 1]);
    out.p[k] = symmetrize(f.p_filt[k] +
                          l * (out.p[k + 1] - f.p_pred[k + 1]) * l.transpose());
  }
  return out;
}

BackwardPass kf_backward_gains(const AssumedModel& m,
                               const ReversedTimeModel& rt) {
  return backward_impl(m, rt, nullptr);
}

BackwardPass kf_backward(const AssumedModel& m, const ReversedTimeModel& rt,
                         const std::vector<Vec>& y) {
  return backward_impl(m, rt, &y);
}

std::vector<Mat> two_filter_covariances(const MarginalMoments& mm,
                                        const ForwardPass& f,
                                        const BackwardPass& b) {
  const int last = mm.last_index();
  if (f.last_index() != last || b.last_index() != last) {
    throw ShapeMismatch("two_filter_covariances: pass lengths disagree");
  }
  std::vector<Mat> p(last + 1);
  for (int k = 0; k <= last; ++k) {
    p[k] = detail::combine_step(f.p_filt[k], b.p_pred[k], mm.sigma[k], k)
               .p_smooth;
  }
  return p;
}

SmoothedPass two_filter_combine(const MarginalMoments& mm, const ForwardPass& f,
                                const BackwardPass& b) {
  if (!f.has_states() || !b.has_states()) {
    throw DimensionMismatch("two_filter_combine: passes lack state estimates");
  }
  const int last = mm.last_index();
  if (f.last_index() != last || b.last_index() != last) {
    throw ShapeMismatch("two_filter_combine: pass lengths disagree");
  }
  SmoothedPass out;
  out.method = SmootherMethod::kTwoFilter;
  out.x.resize(last + 1);
  out.p.resize(last + 1);
  for (int k = 0; k <= last; ++k) {
    detail::CombineStep c =
        detail::combine_step(f.p_filt[k], b.p_pred[k], mm.sigma[k], k);
    out.x[k] = c.p_smooth * (c.info_fwd * f.x_filt[k] +
                             c.info_bwd * b.x_pred[k] -
                             c.info_prior * mm.mu[k]);
    out.p[k] = std::move(c.p_smooth);
  }
  return out;
}

}  // namespace kfmse
