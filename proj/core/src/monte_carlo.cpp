#include "kfmse/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace kfmse {
namespace {

constexpr long kBlockSize = 256;  // fixed: merge order must not depend on width

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Unit-variance, zero-mean scalar draw from the configured family.
double unit_draw(NoiseFamily family, double dof, std::mt19937_64& rng) {
  switch (family) {
    case NoiseFamily::kGaussian: {
      std::normal_distribution<double> d(0.0, 1.0);
      return d(rng);
    }
    case NoiseFamily::kUniformScaled: {
      // U(-sqrt(3), sqrt(3)) has unit variance.
      const double s3 = std::sqrt(3.0);
      std::uniform_real_distribution<double> d(-s3, s3);
      return d(rng);
    }
    case NoiseFamily::kStudentTScaled: {
      // t_nu has variance nu/(nu-2); rescale to 1.
      std::student_t_distribution<double> d(dof);
      return d(rng) * std::sqrt((dof - 2.0) / dof);
    }
  }
  throw Error("unknown noise family");
}

// Streaming mean (and diagonal second moment) accumulator for one block of
// runs, mergeable in fixed order across blocks.
struct Accumulator {
  long n = 0;
  std::vector<Mat> mean_sq_f, mean_sq_s;  // running means of squared errors
  std::vector<Vec> m2_f, m2_s;            // Welford M2 of the diagonals
  std::vector<Vec> mean_err_f, mean_err_s;

  void init(int steps, int nx) {
    mean_sq_f.assign(steps, Mat::Zero(nx, nx));
    mean_sq_s.assign(steps, Mat::Zero(nx, nx));
    m2_f.assign(steps, Vec::Zero(nx));
    m2_s.assign(steps, Vec::Zero(nx));
    mean_err_f.assign(steps, Vec::Zero(nx));
    mean_err_s.assign(steps, Vec::Zero(nx));
  }

  void add(int k, const Vec& err_f, const Vec& err_s) {
    const double inv_n = 1.0 / static_cast<double>(n);
    Mat sq_f = err_f * err_f.transpose();
    Mat sq_s = err_s * err_s.transpose();
    Vec delta_f = sq_f.diagonal() - mean_sq_f[k].diagonal();
    Vec delta_s = sq_s.diagonal() - mean_sq_s[k].diagonal();
    mean_sq_f[k] += (sq_f - mean_sq_f[k]) * inv_n;
    mean_sq_s[k] += (sq_s - mean_sq_s[k]) * inv_n;
    // Welford: (x - old mean) (x - new mean), elementwise on the diagonal.
    m2_f[k] += delta_f.cwiseProduct(sq_f.diagonal() - mean_sq_f[k].diagonal());
    m2_s[k] += delta_s.cwiseProduct(sq_s.diagonal() - mean_sq_s[k].diagonal());
    mean_err_f[k] += (err_f - mean_err_f[k]) * inv_n;
    mean_err_s[k] += (err_s - mean_err_s[k]) * inv_n;
  }

  // Chan's parallel update; called in ascending block order only.
  void merge(const Accumulator& other) {
    if (other.n == 0) {
      return;
    }
    if (n == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(other.n);
    const double nn = na + nb;
    for (std::size_t k = 0; k < mean_sq_f.size(); ++k) {
      Vec delta_f = other.mean_sq_f[k].diagonal() - mean_sq_f[k].diagonal();
      Vec delta_s = other.mean_sq_s[k].diagonal() - mean_sq_s[k].diagonal();
      m2_f[k] += other.m2_f[k] + delta_f.cwiseAbs2() * (na * nb / nn);
      m2_s[k] += other.m2_s[k] + delta_s.cwiseAbs2() * (na * nb / nn);
      mean_sq_f[k] += (other.mean_sq_f[k] - mean_sq_f[k]) * (nb / nn);
      mean_sq_s[k] += (other.mean_sq_s[k] - mean_sq_s[k]) * (nb / nn);
      mean_err_f[k] += (other.mean_err_f[k] - mean_err_f[k]) * (nb / nn);
      mean_err_s[k] += (other.mean_err_s[k] - mean_err_s[k]) * (nb / nn);
    }
    n += other.n;
  }
};

}  // namespace

std::mt19937_64 make_run_engine(std::uint64_t seed, std::uint64_t run_index) {
  // Two mixing rounds decorrelate neighboring run indices.
  std::uint64_t s = splitmix64(seed ^ splitmix64(run_index));
  return std::mt19937_64(s);
}

std::vector<Vec> sample_measurements(const Trajectory& t,
                                     const TrueMeasModel& tm,
                                     std::mt19937_64& rng) {
  if (tm.h_bar.cols() != t.state_dim()) {
    throw DimensionMismatch("sample_measurements: measurement matrix columns " +
                            std::to_string(tm.h_bar.cols()) +
                            " vs trajectory dimension " +
                            std::to_string(t.state_dim()));
  }
  if (tm.noise_family == NoiseFamily::kStudentTScaled &&
      !(tm.student_t_dof > 2.0)) {
    throw Error("sample_measurements: Student-t dof must exceed 2");
  }
  CholeskyFactor chol = cholesky(tm.r_bar, "true noise covariance");
  const int ny = tm.ny();
  std::vector<Vec> y;
  y.reserve(t.states.size());
  Vec unit(ny);
  for (const Vec& x : t.states) {
    for (int i = 0; i < ny; ++i) {
      unit[i] = unit_draw(tm.noise_family, tm.student_t_dof, rng);
    }
    y.push_back(tm.h_bar * x + chol.lower() * unit);
  }
  return y;
}

EmpiricalMse empirical_mse(const Trajectory& t, const TrueMeasModel& tm,
                           const AssumedModel& am, const McConfig& cfg) {
  if (cfg.n_runs < 1) {
    throw ConfigError("empirical_mse: n_runs must be >= 1");
  }
  {
    ValidationReport rep = validate_scenario(t, tm, am);
    if (!rep.ok()) {
      throw DimensionMismatch("invalid scenario:\n" + rep.to_string());
    }
  }
  const int steps = t.last_index() + 1;
  const int nx = am.nx();
  const long n_blocks = (cfg.n_runs + kBlockSize - 1) / kBlockSize;

  std::vector<Accumulator> blocks(n_blocks);
  std::atomic<long> next_block{0};

  auto worker = [&]() {
    for (;;) {
      const long blk = next_block.fetch_add(1);
      if (blk >= n_blocks) {
        return;
      }
      const long run_begin = blk * kBlockSize;
      const long run_end = std::min(run_begin + kBlockSize, cfg.n_runs);
      Accumulator& acc = blocks[blk];
      acc.init(steps, nx);
      for (long run = run_begin; run < run_end; ++run) {
        std::mt19937_64 rng =
            make_run_engine(cfg.seed, static_cast<std::uint64_t>(run));
        std::vector<Vec> y = sample_measurements(t, tm, rng);
        ForwardPass f = kf_forward(am, y);
        SmoothedPass s = rts_smooth(am, f);
        acc.n += 1;
        for (int k = 0; k < steps; ++k) {
          acc.add(k, f.x_filt[k] - t.states[k], s.x[k] - t.states[k]);
        }
      }
    }
  };

  long width = cfg.parallel_width > 0
                   ? cfg.parallel_width
                   : static_cast<long>(std::thread::hardware_concurrency());
  width = std::clamp<long>(width, 1, n_blocks);
  if (width == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(width);
    for (int i = 0; i < width; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& th : pool) {
      th.join();
    }
  }

  Accumulator total;
  total.init(steps, nx);
  for (const Accumulator& blk : blocks) {
    total.merge(blk);
  }

  EmpiricalMse out;
  out.n_runs = total.n;
  out.mse_filter = std::move(total.mean_sq_f);
  out.mse_smoother = std::move(total.mean_sq_s);
  out.mean_err_filter = std::move(total.mean_err_f);
  out.mean_err_smoother = std::move(total.mean_err_s);
  out.se_filter.resize(steps);
  out.se_smoother.resize(steps);
  const double n = static_cast<double>(total.n);
  for (int k = 0; k < steps; ++k) {
    if (total.n > 1) {
      out.se_filter[k] = (total.m2_f[k] / ((n - 1.0) * n)).cwiseSqrt();
      out.se_smoother[k] = (total.m2_s[k] / ((n - 1.0) * n)).cwiseSqrt();
    } else {
      out.se_filter[k] = Vec::Zero(nx);
      out.se_smoother[k] = Vec::Zero(nx);
    }
  }
  return out;
}

ComparisonReport compare(const MseReport& analytical,
                         const EmpiricalMse& empirical, double z_threshold) {
  const int last = analytical.last_index();
  if (empirical.last_index() != last) {
    throw ShapeMismatch("compare: step counts differ");
  }
  if (last < 0 || analytical.mse_filter[0].rows() !=
                      empirical.mse_filter[0].rows()) {
    throw ShapeMismatch("compare: state dimensions differ");
  }
  constexpr double kSeFloor = 1e-15;
  ComparisonReport rep;
  rep.z_threshold = z_threshold;
  rep.rel_diff_filter.resize(last + 1);
  rep.rel_diff_smoother.resize(last + 1);
  rep.z_filter.resize(last + 1);
  rep.z_smoother.resize(last + 1);
  const int nx = static_cast<int>(analytical.mse_filter[0].rows());
  for (int k = 0; k <= last; ++k) {
    rep.z_filter[k] = Vec(nx);
    rep.z_smoother[k] = Vec(nx);
    rep.rel_diff_filter[k] = Vec(nx);
    rep.rel_diff_smoother[k] = Vec(nx);
    for (int i = 0; i < nx; ++i) {
      const double af = analytical.mse_filter[k](i, i);
      const double as = analytical.mse_smoother[k](i, i);
      const double ef = empirical.mse_filter[k](i, i);
      const double es = empirical.mse_smoother[k](i, i);
      rep.z_filter[k][i] =
          (af - ef) / std::max(empirical.se_filter[k][i], kSeFloor);
      rep.z_smoother[k][i] =
          (as - es) / std::max(empirical.se_smoother[k][i], kSeFloor);
      rep.rel_diff_filter[k][i] =
          std::abs(af - ef) / std::max(std::abs(ef), kSeFloor);
      rep.rel_diff_smoother[k][i] =
          std::abs(as - es) / std::max(std::abs(es), kSeFloor);
      rep.max_abs_z = std::max({rep.max_abs_z, std::abs(rep.z_filter[k][i]),
                                std::abs(rep.z_smoother[k][i])});
    }
  }
  rep.pass = rep.max_abs_z <= z_threshold;
  return rep;
}

}  // namespace kfmse
