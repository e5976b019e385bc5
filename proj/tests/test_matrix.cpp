#include "doctest.h"

#include <random>

#include "kfmse/matrix.hpp"
#include "support/random_models.hpp"

using namespace kfmse;

TEST_SUITE("matrix") {

TEST_CASE("spd_solve on identity returns the rhs") {
  SymPd a = SymPd::from(Mat::Identity(2, 2));
  Mat b(2, 1);
  b << 3, 4;
  Mat x = spd_solve(a, b);
  CHECK(x(0, 0) == doctest::Approx(3.0));
  CHECK(x(1, 0) == doctest::Approx(4.0));
}

TEST_CASE("spd_solve scalar division") {
  SymPd a = SymPd::from(Mat::Constant(1, 1, 4.0));
  Mat x = spd_solve(a, Mat::Constant(1, 1, 2.0));
  CHECK(x(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("spd_solve reproduces the hand-inverted 2x2") {
  Mat a(2, 2);
  a << 2, 1, 1, 2;
  Mat inv = spd_solve(SymPd::from(a), Mat::Identity(2, 2));
  CHECK(inv(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(inv(0, 1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(inv(1, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(inv(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("symmetrize forced cases") {
  Mat id = Mat::Identity(2, 2);
  CHECK(symmetrize(id) == id);

  Mat a(2, 2);
  a << 0, 2, 0, 0;
  Mat sa = symmetrize(a);
  CHECK(sa(0, 1) == 1.0);
  CHECK(sa(1, 0) == 1.0);

  Mat b(2, 2);
  b << 1, 3, 1, 1;
  Mat sb = symmetrize(b);
  CHECK(sb(0, 1) == 2.0);
  CHECK(sb(1, 0) == 2.0);
}

TEST_CASE("symmetrize rejects rectangular input") {
  CHECK_THROWS_AS(symmetrize(Mat::Zero(2, 3)), NonSquare);
}

TEST_CASE("symmetrize is exactly idempotent") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Mat a = testing::random_gaussian_mat(4, 4, rng);
    Mat once = symmetrize(a);
    Mat twice = symmetrize(once);
    CHECK(once == twice);
  }
}

TEST_CASE("cholesky rejects indefinite and near-singular input") {
  Mat indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(indefinite), NotPositiveDefinite);

  CHECK_THROWS_AS(cholesky(Mat::Zero(2, 2)), NotPositiveDefinite);
}

TEST_CASE("cholesky factor reproduces the input") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Mat a = testing::random_spd(n, 1e4, rng);
    CholeskyFactor c = cholesky(a);
    Mat residual = c.lower() * c.lower().transpose() - a;
    CHECK(residual.cwiseAbs().maxCoeff() <=
          1e-12 * a.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spd_solve recovers x from a*x at condition numbers up to 1e6") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    Mat a = testing::random_spd(n, 1e6, rng);
    Mat x = testing::random_gaussian_mat(n, 2, rng);
    Mat got = spd_solve(SymPd::from(a), a * x);
    double rel = (got - x).norm() / x.norm();
    CHECK(rel <= 1e-10);
  }
}

TEST_CASE("SymPd enforces the symmetry tolerance") {
  Mat a(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;  // defect 0.1/(1+1) >> 1e-9
  CHECK_THROWS_AS(SymPd::from(a), NotSymmetric);

  Mat b(2, 2);  // defect below tolerance is accepted and symmetrized
  b << 1.0, 1e-11, 0.0, 1.0;
  SymPd ok = SymPd::from(b);
  CHECK(ok.mat()(0, 1) == ok.mat()(1, 0));
}

TEST_CASE("add_jitter nudges the diagonal by 1e-9 trace/n") {
  Mat a(2, 2);
  a << 2, 0, 0, 4;
  Mat j = add_jitter(a);
  CHECK(j(0, 0) == doctest::Approx(2.0 + 3e-9));
  CHECK(j(1, 1) == doctest::Approx(4.0 + 3e-9));
}

TEST_CASE("psd probe accepts zero, boundary and rounding-noise matrices") {
  CHECK(psd_within_tolerance(Mat::Zero(3, 3)));
  CHECK(psd_within_tolerance(Mat::Identity(3, 3)));

  Mat tiny_negative = Mat::Identity(2, 2);
  tiny_negative(1, 1) = -1e-12;  // within -1e-9*trace
  CHECK(psd_within_tolerance(tiny_negative));

  Mat bad = Mat::Identity(2, 2);
  bad(1, 1) = -1e-3;
  CHECK(!psd_within_tolerance(bad));
}

TEST_CASE("cholesky inverse matches solve against identity") {
  std::mt19937_64 rng(31);
  Mat a = testing::random_spd(5, 100.0, rng);
  CholeskyFactor c = cholesky(a);
  Mat inv = c.inverse();
  CHECK((a * inv - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-12);
}

}  // TEST_SUITE
