#include "kfmse/matrix.hpp"

#include <cmath>
#include <string>

namespace kfmse {
namespace {

// Plain left-looking Cholesky. Returns false as soon as a pivot drops to
// min_pivot or below; on success fills `l` (lower triangular).
bool cholesky_lower(const Mat& a, double min_pivot, Mat& l) {
  const int n = static_cast<int>(a.rows());
  l.setZero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= min_pivot) {
      return false;
    }
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = l.row(i).head(j).dot(l.row(j).head(j));
      l(i, j) = (a(i, j) - s) / l(j, j);
    }
  }
  return true;
}

void require_square(const Mat& a, const char* who) {
  if (a.rows() != a.cols()) {
    throw NonSquare(std::string(who) + ": expected square matrix, got " +
                    std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  if (a.rows() < 1) {
    throw DimensionMismatch(std::string(who) + ": empty matrix");
  }
}

}  // namespace

double symmetry_defect(const Mat& a) {
  require_square(a, "symmetry_defect");
  double num = (a - a.transpose()).cwiseAbs().maxCoeff();
  double den = 1.0 + a.cwiseAbs().maxCoeff();
  return num / den;
}

Mat symmetrize(const Mat& a) {
  require_square(a, "symmetrize");
  return 0.5 * (a + a.transpose());
}

Mat CholeskyFactor::solve(const Mat& b) const {
  if (b.rows() != l_.rows()) {
    throw DimensionMismatch("cholesky solve: rhs has " +
                            std::to_string(b.rows()) + " rows, expected " +
                            std::to_string(l_.rows()));
  }
  Mat y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.transpose().triangularView<Eigen::Upper>().solve(y);
}

Mat CholeskyFactor::inverse() const {
  Mat id = Mat::Identity(l_.rows(), l_.cols());
  return solve(id);
}

CholeskyFactor cholesky(const Mat& a, const char* what) {
  require_square(a, what);
  const int n = static_cast<int>(a.rows());
  const double eps_pd = 1e-12 * a.trace() / n;
  Mat l;
  if (!cholesky_lower(a, eps_pd, l)) {
    throw NotPositiveDefinite(std::string(what) +
                              ": Cholesky pivot at or below " +
                              std::to_string(eps_pd));
  }
  return CholeskyFactor(std::move(l));
}

Mat add_jitter(const Mat& a) {
  require_square(a, "add_jitter");
  const int n = static_cast<int>(a.rows());
  const double delta = 1e-9 * a.trace() / n;
  return a + delta * Mat::Identity(n, n);
}

bool psd_within_tolerance(const Mat& a, double abs_floor) {
  require_square(a, "psd_within_tolerance");
  const int n = static_cast<int>(a.rows());
  // The absolute terms keep the probe meaningful for matrices that are zero
  // or pure rounding noise.
  const double delta = 1e-9 * std::max(a.trace(), 0.0) +
                       1e-14 * a.cwiseAbs().maxCoeff() + abs_floor + 1e-300;
  Mat l;
  return cholesky_lower(symmetrize(a) + delta * Mat::Identity(n, n), 0.0, l);
}

SymPd SymPd::from(const Mat& a, const char* what) {
  double defect = symmetry_defect(a);
  if (defect > kSymmetryTol) {
    throw NotSymmetric(std::string(what) + ": symmetry defect " +
                       std::to_string(defect) + " exceeds tolerance");
  }
  Mat sym = symmetrize(a);
  CholeskyFactor chol = cholesky(sym, what);
  return SymPd(std::move(sym), std::move(chol));
}

Mat spd_solve(const SymPd& a, const Mat& b) {
  Mat x = a.chol().solve(b);
  // One step of iterative refinement holds the backward-stable contract at
  // condition numbers up to about 1e6.
  Mat residual = b - a.mat() * x;
  return x + a.chol().solve(residual);
}

}  // namespace kfmse
