#include "kfmse/models.hpp"

#include <cmath>
#include <sstream>

namespace kfmse {

Trajectory Trajectory::from_states(std::vector<Vec> states) {
  if (states.empty()) {
    throw DimensionMismatch("trajectory: needs at least one state");
  }
  const auto dim = states.front().size();
  if (dim < 1) {
    throw DimensionMismatch("trajectory: zero-dimensional states");
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k].size() != dim) {
      throw DimensionMismatch("trajectory: state " + std::to_string(k) +
                              " has dimension " +
                              std::to_string(states[k].size()) + ", expected " +
                              std::to_string(dim));
    }
    if (!states[k].allFinite()) {
      throw DimensionMismatch("trajectory: state " + std::to_string(k) +
                              " has non-finite entries");
    }
  }
  return Trajectory{std::move(states)};
}

AssumedModel AssumedModel::make(Mat f, Mat q, Mat h, Mat r, Vec mu0,
                                Mat sigma0) {
  if (f.rows() != f.cols()) {
    throw NonSquare("assumed model: F must be square");
  }
  const auto nx = f.rows();
  const auto ny = h.rows();
  if (h.cols() != nx) {
    throw DimensionMismatch("assumed model: H has " +
                            std::to_string(h.cols()) + " columns, expected " +
                            std::to_string(nx));
  }
  if (q.rows() != nx || q.cols() != nx) {
    throw DimensionMismatch("assumed model: Q must be n_x x n_x");
  }
  if (r.rows() != ny || r.cols() != ny) {
    throw DimensionMismatch("assumed model: R must be n_y x n_y");
  }
  if (mu0.size() != nx) {
    throw DimensionMismatch("assumed model: mu0 must have dimension n_x");
  }
  if (sigma0.rows() != nx || sigma0.cols() != nx) {
    throw DimensionMismatch("assumed model: Sigma0 must be n_x x n_x");
  }
  if (symmetry_defect(q) > kSymmetryTol) {
    throw NotSymmetric("assumed model: Q is not symmetric");
  }
  Mat q_sym = symmetrize(q);
  if (!psd_within_tolerance(q_sym)) {
    throw SchurNegative("assumed model: Q failed the PSD probe");
  }
  return AssumedModel{std::move(f),
                      std::move(q_sym),
                      std::move(h),
                      SymPd::from(r, "assumed model R"),
                      std::move(mu0),
                      SymPd::from(sigma0, "assumed model Sigma0")};
}

MarginalMoments marginal_moments(const AssumedModel& m, int last_index) {
  if (last_index < 0) {
    throw DimensionMismatch("marginal_moments: last_index must be >= 0");
  }
  MarginalMoments mm;
  mm.mu.reserve(last_index + 1);
  mm.sigma.reserve(last_index + 1);
  mm.mu.push_back(m.mu0);
  mm.sigma.push_back(m.sigma0.mat());
  for (int k = 1; k <= last_index; ++k) {
    mm.mu.push_back(m.f * mm.mu.back());
    Mat sigma = symmetrize(m.f * mm.sigma.back() * m.f.transpose() + m.q);
    cholesky(sigma, "Sigma_k");  // PD required downstream; fail early
    mm.sigma.push_back(std::move(sigma));
  }
  return mm;
}

ReversedTimeModel reversed_time_model(const AssumedModel& m, int last_index) {
  ReversedTimeModel rt;
  rt.moments = marginal_moments(m, last_index);
  rt.f_b.reserve(std::max(last_index, 0));
  rt.q_b.reserve(std::max(last_index, 0));
  for (int k = 0; k < last_index; ++k) {
    const Mat& sigma_k = rt.moments.sigma[k];
    CholeskyFactor next = cholesky(rt.moments.sigma[k + 1], "Sigma_{k+1}");
    // f_b = Sigma_k F^T Sigma_{k+1}^{-1} == (Sigma_{k+1}^{-1} F Sigma_k)^T
    Mat f_b = next.solve(m.f * sigma_k).transpose();
    Mat q_b = symmetrize(sigma_k - f_b * m.f * sigma_k);
    // Admit cancellation residue at the scale of Sigma_k: the complement is
    // exactly zero when Q = 0.
    const double floor = 1e-12 * sigma_k.trace() / sigma_k.rows();
    if (!psd_within_tolerance(q_b, floor)) {
      throw SchurNegative("reversed-time model: Q_b at step " +
                          std::to_string(k + 1) + " failed the PSD probe");
    }
    rt.f_b.push_back(std::move(f_b));
    rt.q_b.push_back(std::move(q_b));
  }
  return rt;
}

std::string ValidationReport::to_string() const {
  if (ok()) {
    return "scenario valid";
  }
  std::ostringstream os;
  for (const auto& issue : issues) {
    os << issue.code << ": " << issue.detail << "\n";
  }
  return os.str();
}

ValidationReport validate_scenario(const Trajectory& t, const TrueMeasModel& tm,
                                   const AssumedModel& am) {
  ValidationReport rep;
  auto add = [&rep](std::string code, std::string detail) {
    rep.issues.push_back({std::move(code), std::move(detail)});
  };

  const int nx = am.nx();
  const int ny = am.ny();
  if (t.state_dim() != nx) {
    add("DimensionMismatch", "trajectory state dimension " +
                                 std::to_string(t.state_dim()) +
                                 " vs assumed model n_x " + std::to_string(nx));
  }
  if (tm.h_bar.cols() != t.state_dim()) {
    add("DimensionMismatch", "true measurement matrix has " +
                                 std::to_string(tm.h_bar.cols()) +
                                 " columns vs trajectory dimension " +
                                 std::to_string(t.state_dim()));
  }
  if (tm.ny() != ny) {
    add("DimensionMismatch", "true model n_y " + std::to_string(tm.ny()) +
                                 " vs assumed model n_y " + std::to_string(ny));
  }
  if (tm.r_bar.rows() != tm.r_bar.cols() || tm.r_bar.rows() != tm.ny()) {
    add("DimensionMismatch", "true noise covariance must be n_y x n_y");
  } else {
    if (symmetry_defect(tm.r_bar) > kSymmetryTol) {
      add("NotSymmetric", "true noise covariance is not symmetric");
    } else if (!psd_within_tolerance(tm.r_bar)) {
      add("NotPsd", "true noise covariance failed the PSD probe");
    }
  }
  if (!tm.h_bar.allFinite()) {
    add("NonFinite", "true measurement matrix has non-finite entries");
  }
  if (!tm.r_bar.allFinite()) {
    add("NonFinite", "true noise covariance has non-finite entries");
  }
  if (tm.noise_family == NoiseFamily::kStudentTScaled &&
      !(tm.student_t_dof > 2.0)) {
    add("InvalidParameter",
        "Student-t degrees of freedom must exceed 2 for a finite covariance");
  }
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    if (!t.states[k].allFinite()) {
      add("NonFinite", "trajectory state " + std::to_string(k));
    }
  }
  return rep;
}

}  // namespace kfmse
