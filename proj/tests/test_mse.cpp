#include "doctest.h"

#include <random>

#include "kfmse/mse.hpp"
#include "support/random_models.hpp"

using namespace kfmse;

namespace {

AssumedModel scalar_model(double f, double q, double h, double r, double mu0,
                          double sigma0) {
  return AssumedModel::make(Mat::Constant(1, 1, f), Mat::Constant(1, 1, q),
                            Mat::Constant(1, 1, h), Mat::Constant(1, 1, r),
                            Vec::Constant(1, mu0),
                            Mat::Constant(1, 1, sigma0));
}

// The worked scalar fixture: F=1, Q=0, H=H_true=1, R=1, mu0=0, Sigma0=1,
// trajectory [1, 1], true noise covariance 2.
struct ScalarFixture {
  AssumedModel am = scalar_model(1, 0, 1, 1, 0, 1);
  TrueMeasModel tm{Mat::Constant(1, 1, 1.0), Mat::Constant(1, 1, 2.0),
                   NoiseFamily::kGaussian, 5.0};
  Trajectory traj = Trajectory::from_states(
      {Vec::Constant(1, 1.0), Vec::Constant(1, 1.0)});
};

struct Pipeline {
  ReversedTimeModel rt;
  ForwardPass fg;
  BackwardPass bg;
  MismatchSequences ms;

  Pipeline(const Trajectory& t, const TrueMeasModel& tm, const AssumedModel& am)
      : rt(reversed_time_model(am, t.last_index())),
        fg(kf_forward_gains(am, t.last_index())),
        bg(kf_backward_gains(am, rt)),
        ms(mismatch_sequences(t, tm, am, rt.moments)) {}
};

// A trajectory that follows the assumed dynamics exactly from mu0.
Trajectory model_following_trajectory(const AssumedModel& am, int last) {
  std::vector<Vec> states;
  Vec x = am.mu0;
  for (int k = 0; k <= last; ++k) {
    states.push_back(x);
    x = am.f * x;
  }
  return Trajectory::from_states(std::move(states));
}

}  // namespace

TEST_SUITE("mse") {

TEST_CASE("mismatch sequences: model-following trajectory has zero drivers") {
  std::mt19937_64 rng(61);
  AssumedModel am = testing::random_model(3, 2, rng);
  TrueMeasModel tm{am.h, am.r.mat(), NoiseFamily::kGaussian, 5.0};
  Trajectory t = model_following_trajectory(am, 8);
  MarginalMoments mm = marginal_moments(am, 8);
  MismatchSequences ms = mismatch_sequences(t, tm, am, mm);
  REQUIRE(ms.w_tilde.size() == 8);
  REQUIRE(ms.v_tilde.size() == 9);
  for (const Vec& w : ms.w_tilde) {
    CHECK(w.cwiseAbs().maxCoeff() <= 1e-12);
  }
  for (const Vec& v : ms.v_tilde) {
    CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }
  for (const Vec& b : ms.b_prior) {
    CHECK(b.cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("mismatch sequences: scalar forced values") {
  ScalarFixture fx;
  MarginalMoments mm = marginal_moments(fx.am, 1);
  MismatchSequences ms = mismatch_sequences(fx.traj, fx.tm, fx.am, mm);
  CHECK(ms.w_tilde[0][0] == 0.0);
  CHECK(ms.b_prior[0][0] == -1.0);
  CHECK(ms.b_prior[1][0] == -1.0);
  CHECK(ms.y_bar[0][0] == 1.0);
}

TEST_CASE("mismatch sequences: scaled measurement matrix") {
  const double eta = 0.99;
  std::mt19937_64 rng(67);
  Mat h_bar = testing::random_gaussian_mat(2, 4, rng);
  AssumedModel am = AssumedModel::make(
      Mat::Identity(4, 4), 0.1 * Mat::Identity(4, 4), eta * h_bar,
      Mat::Identity(2, 2), Vec::Zero(4), Mat::Identity(4, 4));
  TrueMeasModel tm{h_bar, Mat::Identity(2, 2), NoiseFamily::kGaussian, 5.0};
  Trajectory t = testing::random_trajectory(4, 5, rng);
  MarginalMoments mm = marginal_moments(am, 5);
  MismatchSequences ms = mismatch_sequences(t, tm, am, mm);
  for (int k = 0; k <= 5; ++k) {
    Vec expected = (1.0 - eta) * (h_bar * t.states[k]);
    CHECK(testing::rel_err(ms.v_tilde[k], expected) <= 1e-14);
  }
}

TEST_CASE("forward bias: zero is a fixed point") {
  std::mt19937_64 rng(71);
  AssumedModel am = testing::random_model(3, 1, rng);
  TrueMeasModel tm{am.h, am.r.mat(), NoiseFamily::kGaussian, 5.0};
  Trajectory t = model_following_trajectory(am, 10);
  Pipeline p(t, tm, am);
  std::vector<Vec> b = bias_forward(am, p.fg, p.ms);
  for (const Vec& bk : b) {
    CHECK(bk.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("forward bias: scalar hand recursion") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  std::vector<Vec> b = bias_forward(fx.am, p.fg, p.ms);
  CHECK(b[0][0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(b[1][0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward bias: matching prior removes the bias") {
  ScalarFixture fx;
  fx.am = scalar_model(1, 0, 1, 1, 1.0, 1);  // mu0 = trajectory value
  Pipeline p(fx.traj, fx.tm, fx.am);
  std::vector<Vec> b = bias_forward(fx.am, p.fg, p.ms);
  CHECK(b[0][0] == 0.0);
  CHECK(b[1][0] == 0.0);
}

TEST_CASE("backward bias: scalar hand recursion") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  BackwardBias bb = bias_backward(fx.am, p.rt, p.bg, p.ms);
  CHECK(bb.predicted[1][0] == doctest::Approx(-1.0));
  CHECK(bb.filtered[1][0] == doctest::Approx(-0.5));
  CHECK(bb.predicted[0][0] == doctest::Approx(-0.5));
  CHECK(bb.filtered[0][0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("combined bias: scalar hand value and k = K reduction") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  std::vector<Vec> bf = bias_forward(fx.am, p.fg, p.ms);
  BackwardBias bb = bias_backward(fx.am, p.rt, p.bg, p.ms);
  std::vector<Vec> bs =
      bias_combine(p.rt.moments, p.fg, p.bg, bf, bb.predicted, p.ms);
  CHECK(bs[0][0] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  // k = K: backward prediction is the prior anchor, so the smoothed bias
  // collapses to the forward bias.
  CHECK(bs[1][0] == doctest::Approx(bf[1][0]).epsilon(1e-12));
}

TEST_CASE("bias identity: recursions equal the noiseless filter runs") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const int nx = 1 + static_cast<int>(rng() % 4);
    const int ny = 1 + static_cast<int>(rng() % 2);
    const int last = 30;
    AssumedModel am = testing::random_model(nx, ny, rng);
    Mat h_bar = testing::random_gaussian_mat(ny, nx, rng);
    TrueMeasModel tm{h_bar, testing::random_spd(ny, 4.0, rng),
                     NoiseFamily::kGaussian, 5.0};
    Trajectory t = testing::random_trajectory(nx, last, rng);
    Pipeline p(t, tm, am);

    std::vector<Vec> bf = bias_forward(am, p.fg, p.ms);
    BackwardBias bb = bias_backward(am, p.rt, p.bg, p.ms);
    std::vector<Vec> bs =
        bias_combine(p.rt.moments, p.fg, p.bg, bf, bb.predicted, p.ms);

    ForwardPass f_star = kf_forward(am, p.ms.y_bar);
    BackwardPass b_star = kf_backward(am, p.rt, p.ms.y_bar);
    SmoothedPass s_star = two_filter_combine(p.rt.moments, f_star, b_star);
    for (int k = 0; k <= last; ++k) {
      Vec want_f = f_star.x_filt[k] - t.states[k];
      Vec want_b = b_star.x_filt[k] - t.states[k];
      Vec want_s = s_star.x[k] - t.states[k];
      CHECK(testing::rel_err(bf[k], want_f) <= 1e-9);
      CHECK(testing::rel_err(bb.filtered[k], want_b) <= 1e-9);
      CHECK(testing::rel_err(bs[k], want_s) <= 1e-9);
    }
  }
}

TEST_CASE("forward covariance: zero true noise gives zero C") {
  std::mt19937_64 rng(79);
  AssumedModel am = testing::random_model(2, 1, rng);
  TrueMeasModel tm{am.h, Mat::Zero(1, 1), NoiseFamily::kGaussian, 5.0};
  ForwardPass fg = kf_forward_gains(am, 12);
  std::vector<Mat> c = cov_forward(am, tm, fg);
  for (const Mat& ck : c) {
    CHECK(ck.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("forward covariance: scalar hand recursion") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  std::vector<Mat> c = cov_forward(fx.am, fx.tm, p.fg);
  CHECK(c[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c[1](0, 0) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("backward covariance: scalar hand recursion and anchor") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  BackwardCov bc = cov_backward(fx.am, fx.tm, p.rt, p.bg);
  CHECK(bc.predicted[1](0, 0) == 0.0);  // anchor C_{K|K+1:K} = 0
  CHECK(bc.filtered[1](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bc.predicted[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bc.filtered[0](0, 0) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("combined covariance: scalar hand value") {
  ScalarFixture fx;
  Pipeline p(fx.traj, fx.tm, fx.am);
  std::vector<Mat> cf = cov_forward(fx.am, fx.tm, p.fg);
  BackwardCov bc = cov_backward(fx.am, fx.tm, p.rt, p.bg);
  std::vector<Mat> cs =
      cov_combine(p.rt.moments, p.fg, p.bg, cf, bc.predicted);
  // P_{0|0:1} = 1/3; information route: (1/3)(2*0.5*2 + 2*0.5*2)(1/3) = 4/9.
  CHECK(cs[0](0, 0) == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
  // k = K reduces to the forward term.
  CHECK(cs[1](0, 0) == doctest::Approx(cf[1](0, 0)).epsilon(1e-12));
}

TEST_CASE("matched models: C never exceeds the reported P") {
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    const int nx = 1 + static_cast<int>(rng() % 3);
    AssumedModel am = testing::random_model(nx, 1, rng);
    TrueMeasModel tm{am.h, am.r.mat(), NoiseFamily::kGaussian, 5.0};
    ForwardPass fg = kf_forward_gains(am, 25);
    std::vector<Mat> c = cov_forward(am, tm, fg);
    for (int k = 0; k <= 25; ++k) {
      const double tol = 1e-9 * fg.p_filt[k].trace();
      CHECK(testing::min_eigenvalue(fg.p_filt[k] - c[k]) >= -tol);
    }
  }
}

TEST_CASE("error propagation: definitional equivalence and linearity") {
  std::mt19937_64 rng(89);
  const int nx = 3, ny = 2, last = 20;
  AssumedModel am = testing::random_model(nx, ny, rng);
  Mat h_bar = testing::random_gaussian_mat(ny, nx, rng);
  TrueMeasModel tm{h_bar, testing::random_spd(ny, 4.0, rng),
                   NoiseFamily::kGaussian, 5.0};
  Trajectory t = testing::random_trajectory(nx, last, rng);
  Pipeline p(t, tm, am);

  std::vector<Vec> zero(last + 1, Vec::Zero(ny));
  ErrorSequences e0 = error_propagate(am, p.rt, p.fg, p.bg, zero);
  for (int k = 0; k <= last; ++k) {
    CHECK(e0.forward[k].cwiseAbs().maxCoeff() == 0.0);
    CHECK(e0.smoothed[k].cwiseAbs().maxCoeff() == 0.0);
  }

  std::vector<Vec> noise(last + 1);
  for (auto& v : noise) {
    v = testing::random_gaussian_vec(ny, rng);
  }
  ErrorSequences e = error_propagate(am, p.rt, p.fg, p.bg, noise);

  std::vector<Vec> noisy(p.ms.y_bar);
  for (int k = 0; k <= last; ++k) {
    noisy[k] += noise[k];
  }
  ForwardPass f_noisy = kf_forward(am, noisy);
  ForwardPass f_clean = kf_forward(am, p.ms.y_bar);
  for (int k = 0; k <= last; ++k) {
    Vec want = f_noisy.x_filt[k] - f_clean.x_filt[k];
    CHECK(testing::rel_err(e.forward[k], want) <= 1e-10);
  }

  std::vector<Vec> scaled(noise);
  for (auto& v : scaled) {
    v *= -2.5;
  }
  ErrorSequences e_scaled = error_propagate(am, p.rt, p.fg, p.bg, scaled);
  for (int k = 0; k <= last; ++k) {
    CHECK(testing::rel_err(e_scaled.forward[k], Vec(-2.5 * e.forward[k])) <=
          1e-10);
    CHECK(testing::rel_err(e_scaled.smoothed[k], Vec(-2.5 * e.smoothed[k])) <=
          1e-10);
  }
}

TEST_CASE("covariance recursions match the brute-force sensitivity oracle") {
  // e is linear in the stacked noise, so C = M blockdiag(R_true) M^T where
  // the columns of M are error responses to unit impulses. Build M through
  // error_propagate and compare with the recursion outputs.
  std::mt19937_64 rng(97);
  for (int trial = 0; trial < 4; ++trial) {
    const int nx = 1 + static_cast<int>(rng() % 4);
    const int ny = 1 + static_cast<int>(rng() % 2);
    const int last = 12 + static_cast<int>(rng() % 29);  // up to 40
    AssumedModel am = testing::random_model(nx, ny, rng);
    Mat h_bar = testing::random_gaussian_mat(ny, nx, rng);
    Mat r_bar = testing::random_spd(ny, 5.0, rng);
    TrueMeasModel tm{h_bar, r_bar, NoiseFamily::kGaussian, 5.0};
    Trajectory t = testing::random_trajectory(nx, last, rng);
    Pipeline p(t, tm, am);

    std::vector<Mat> cf = cov_forward(am, tm, p.fg);
    BackwardCov bc = cov_backward(am, tm, p.rt, p.bg);
    std::vector<Mat> cs = cov_combine(p.rt.moments, p.fg, p.bg, cf,
                                      bc.predicted);

    // Impulse responses: for each time j and channel c, columns of the
    // filter/smoother Jacobians at every k.
    std::vector<std::vector<Mat>> m_fwd(last + 1), m_sm(last + 1);
    for (int k = 0; k <= last; ++k) {
      m_fwd[k].assign(last + 1, Mat::Zero(nx, ny));
      m_sm[k].assign(last + 1, Mat::Zero(nx, ny));
    }
    std::vector<Vec> impulse(last + 1, Vec::Zero(ny));
    for (int j = 0; j <= last; ++j) {
      for (int c = 0; c < ny; ++c) {
        impulse[j][c] = 1.0;
        ErrorSequences e = error_propagate(am, p.rt, p.fg, p.bg, impulse);
        impulse[j][c] = 0.0;
        for (int k = 0; k <= last; ++k) {
          m_fwd[k][j].col(c) = e.forward[k];
          m_sm[k][j].col(c) = e.smoothed[k];
        }
      }
    }
    for (int k = 0; k <= last; ++k) {
      Mat want_f = Mat::Zero(nx, nx);
      Mat want_s = Mat::Zero(nx, nx);
      for (int j = 0; j <= last; ++j) {
        want_f += m_fwd[k][j] * r_bar * m_fwd[k][j].transpose();
        want_s += m_sm[k][j] * r_bar * m_sm[k][j].transpose();
      }
      CHECK(testing::rel_err(cf[k], want_f) <= 1e-8);
      CHECK(testing::rel_err(cs[k], want_s) <= 1e-8);
    }
  }
}

TEST_CASE("predict_mse: no mismatch and no noise gives zero MSE") {
  std::mt19937_64 rng(101);
  Mat f = testing::random_stable_f(3, 0.9, rng);
  Mat h = testing::random_gaussian_mat(2, 3, rng);
  Vec mu0 = testing::random_gaussian_vec(3, rng);
  AssumedModel am =
      AssumedModel::make(f, 0.2 * Mat::Identity(3, 3), h,
                         Mat::Identity(2, 2), mu0, Mat::Identity(3, 3));
  TrueMeasModel tm{h, Mat::Zero(2, 2), NoiseFamily::kGaussian, 5.0};
  Trajectory t = model_following_trajectory(am, 15);
  MseReport rep = predict_mse(t, tm, am);
  for (int k = 0; k <= 15; ++k) {
    CHECK(rep.mse_filter[k].cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(rep.mse_smoother[k].cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("predict_mse: scalar worked values") {
  ScalarFixture fx;
  MseReport rep = predict_mse(fx.traj, fx.tm, fx.am);
  CHECK(rep.mse_filter[0](0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(rep.mse_filter[1](0, 0) == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(rep.cov_filter[0](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.bias_filter[0][0] == doctest::Approx(-0.5).epsilon(1e-12));
  // mse = cov + bias^2 exactly by construction
  for (int k = 0; k <= 1; ++k) {
    CHECK(rep.mse_filter[k](0, 0) ==
          rep.cov_filter[k](0, 0) +
              rep.bias_filter[k][0] * rep.bias_filter[k][0]);
  }
}

TEST_CASE("predict_mse equals the composed sufficient statistics") {
  std::mt19937_64 rng(103);
  const int nx = 3, ny = 2, last = 40;
  AssumedModel am = testing::random_model(nx, ny, rng);
  Mat h_bar = 0.98 * am.h;
  TrueMeasModel tm{h_bar, testing::random_spd(ny, 3.0, rng),
                   NoiseFamily::kGaussian, 5.0};
  Trajectory t = testing::random_trajectory(nx, last, rng);

  MseReport rep = predict_mse(t, tm, am);
  MsePredictorState st = mse_sufficient_statistics(t, tm, am);
  for (int k = 0; k <= last; ++k) {
    CHECK(testing::rel_err(rep.bias_filter[k], st.b_fwd[k]) == 0.0);
    CHECK(testing::rel_err(rep.bias_smoother[k], st.b_smooth[k]) == 0.0);
    CHECK(testing::rel_err(rep.cov_filter[k], st.c_fwd[k]) == 0.0);
    CHECK(testing::rel_err(rep.cov_smoother[k], st.c_smooth[k]) == 0.0);
  }
}

TEST_CASE("streaming emission matches the batch report") {
  ScalarFixture fx;
  MseReport rep = predict_mse(fx.traj, fx.tm, fx.am);
  int rows = 0;
  predict_mse_stream(fx.traj, fx.tm, fx.am, [&](const MseRow& row) {
    CHECK(row.k == rows);
    CHECK(row.mse_filter == rep.mse_filter[row.k]);
    CHECK(row.mse_smoother == rep.mse_smoother[row.k]);
    ++rows;
  });
  CHECK(rows == 2);
}

TEST_CASE("matched measurement models: smoothing never increases trace(C)") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const int nx = 1 + static_cast<int>(rng() % 3);
    AssumedModel am = testing::random_model(nx, 1, rng);
    TrueMeasModel tm{am.h, am.r.mat(), NoiseFamily::kGaussian, 5.0};
    Trajectory t = testing::random_trajectory(nx, 25, rng);
    MseReport rep = predict_mse(t, tm, am);
    for (int k = 0; k <= 25; ++k) {
      CHECK(rep.cov_smoother[k].trace() <= rep.cov_filter[k].trace() + 1e-9);
    }
  }
}

TEST_CASE("K = 0: filter and smoother MSE coincide exactly") {
  std::mt19937_64 rng(109);
  AssumedModel am = testing::random_model(2, 1, rng);
  TrueMeasModel tm{am.h, testing::random_spd(1, 2.0, rng),
                   NoiseFamily::kGaussian, 5.0};
  Trajectory t = Trajectory::from_states({testing::random_gaussian_vec(2, rng)});
  MseReport rep = predict_mse(t, tm, am);
  CHECK(testing::rel_err(rep.mse_filter[0], rep.mse_smoother[0]) <= 1e-12);
  CHECK(testing::rel_err(rep.p_filter[0], rep.p_smoother[0]) <= 1e-12);
}

}  // TEST_SUITE
