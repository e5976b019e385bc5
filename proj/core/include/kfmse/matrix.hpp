#pragma once

#include <Eigen/Dense>

#include "kfmse/errors.hpp"

// Small dense kernel for the symmetric systems this library works with.
// Matrices are a handful of rows at most, so everything here favors
// clarity and strict error checking over blocking or vectorization tricks.

namespace kfmse {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Relative symmetry tolerance accepted by SymPd: max|A - A^T| / (1 + max|A|).
inline constexpr double kSymmetryTol = 1e-9;

/// max|A - A^T| / (1 + max|A|). Throws NonSquare.
double symmetry_defect(const Mat& a);

/// (a + a^T) / 2. Throws NonSquare.
Mat symmetrize(const Mat& a);

/// Lower-triangular Cholesky factor L with L L^T = A.
class CholeskyFactor {
 public:
  const Mat& lower() const { return l_; }
  int n() const { return static_cast<int>(l_.rows()); }

  /// Solves A x = b by forward/back substitution; no inverse is formed.
  /// Column vectors pass through as single-column matrices.
  Mat solve(const Mat& b) const;

  /// Explicit inverse of A, for callers that multiply by it repeatedly.
  Mat inverse() const;

 private:
  friend CholeskyFactor cholesky(const Mat& a, const char* what);
  explicit CholeskyFactor(Mat l) : l_(std::move(l)) {}
  Mat l_;
};

/// Factorizes a symmetric positive definite matrix as L L^T.
///
/// A pivot at or below eps_pd = 1e-12 * trace(a) / n raises
/// NotPositiveDefinite; `what` names the offending matrix in the message.
CholeskyFactor cholesky(const Mat& a, const char* what = "matrix");

/// a + delta*I with delta = 1e-9 * trace(a) / n, the opt-in regularization
/// for callers that prefer jitter over a NotPositiveDefinite error.
Mat add_jitter(const Mat& a);

/// PSD probe: attempts a Cholesky factorization of a + delta*I with a
/// jitter delta of about 1e-9 * trace(a) + abs_floor. Accepts matrices whose
/// smallest eigenvalue is no worse than roughly -1e-9 * trace(a) - abs_floor.
/// The floor lets callers admit rounding residue scaled by a parent matrix
/// (a Schur complement that is exactly zero in exact arithmetic, say).
bool psd_within_tolerance(const Mat& a, double abs_floor = 0.0);

/// Symmetric positive definite matrix, validated on construction and
/// carrying its Cholesky factor.
class SymPd {
 public:
  /// Requires symmetry within kSymmetryTol and all Cholesky pivots above the
  /// eps_pd threshold. Throws NotPositiveDefinite or NonSquare.
  static SymPd from(const Mat& a, const char* what = "matrix");

  int n() const { return static_cast<int>(mat_.rows()); }
  const Mat& mat() const { return mat_; }
  const CholeskyFactor& chol() const { return chol_; }

 private:
  SymPd(Mat m, CholeskyFactor c) : mat_(std::move(m)), chol_(std::move(c)) {}
  Mat mat_;
  CholeskyFactor chol_;
};

/// Solves a X = b for a positive definite a. b may have any column count;
/// column vectors pass through as single-column matrices.
Mat spd_solve(const SymPd& a, const Mat& b);

}  // namespace kfmse
