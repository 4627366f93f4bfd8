#ifndef GWPP_METRICS_HPP
#define GWPP_METRICS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace gwpp {

struct DensityEstimate {
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  double bandwidth = 0.0;
};

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
};

struct AccuracyReport {
  std::vector<std::string> names;
  Eigen::VectorXd accuracy;    // one entry per parameter, in [0,1]
  double mean_accuracy = 0.0;
  double mc_error = 0.0;       // across replications, when aggregated
};

inline double empirical_quantile(std::vector<double> sorted_vals, double p) {
  const std::size_t n = sorted_vals.size();
  if (n == 0) throw std::invalid_argument("empirical_quantile: empty input");
  if (n == 1) return sorted_vals[0];
  const double h = p * (static_cast<double>(n) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double f = h - static_cast<double>(lo);
  return sorted_vals[lo] * (1.0 - f) + sorted_vals[hi] * f;
}

namespace detail {

inline double silverman_bandwidth(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / (n - 1));
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = empirical_quantile(sorted, 0.75) - empirical_quantile(sorted, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline Eigen::VectorXd kde_on_grid(const Eigen::VectorXd& samples, const Eigen::VectorXd& grid,
                                   double h) {
  const int n = static_cast<int>(samples.size());
  const int g = static_cast<int>(grid.size());
  Eigen::VectorXd dens = Eigen::VectorXd::Zero(g);
  const double norm = 1.0 / (n * h * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < n; ++i) {
    const double x = samples[i];
    for (int k = 0; k < g; ++k) {
      const double u = (grid[k] - x) / h;
      dens[k] += std::exp(-0.5 * u * u);
    }
  }
  return dens * norm;
}

}  // namespace detail

// Gaussian kernel density with the Silverman bandwidth
// 0.9 * min(sd, IQR/1.34) * n^(-1/5) on a grid spanning the data +/- 3h.
inline DensityEstimate kde_gaussian(const Eigen::VectorXd& samples, int grid_size = 512) {
  if (samples.size() < 10) throw std::invalid_argument("kde_gaussian: need at least 10 samples");
  if (grid_size < 2) throw std::invalid_argument("kde_gaussian: grid_size must be >= 2");
  const double h = detail::silverman_bandwidth(samples);
  if (!(h > 0.0))
    throw std::invalid_argument("kde_gaussian: degenerate input, zero-variance samples");
  DensityEstimate out;
  out.bandwidth = h;
  const double lo = samples.minCoeff() - 3.0 * h;
  const double hi = samples.maxCoeff() + 3.0 * h;
  out.grid.resize(grid_size);
  const double step = (hi - lo) / (grid_size - 1);
  for (int k = 0; k < grid_size; ++k) out.grid[k] = lo + k * step;
  out.density = detail::kde_on_grid(samples, out.grid, h);
  return out;
}

// Normalized total-variation accuracy between two draw sets:
// 1 - (1/2) * integral |p_a - p_b|, by Riemann sum over a shared 512-point
// grid. Both densities use one bandwidth, the Silverman rule applied to the
// pooled draws, so neither side is smoothed more than the other.
inline double tv_accuracy(const Eigen::VectorXd& draws_a, const Eigen::VectorXd& draws_b,
                          int grid_size = 512) {
  if (draws_a.size() < 10 || draws_b.size() < 10)
    throw std::invalid_argument("tv_accuracy: need at least 10 draws on each side");
  Eigen::VectorXd pooled(draws_a.size() + draws_b.size());
  pooled << draws_a, draws_b;
  const double h = detail::silverman_bandwidth(pooled);
  if (!(h > 0.0)) throw std::invalid_argument("tv_accuracy: degenerate input");

  const double lo = pooled.minCoeff() - 3.0 * h;
  const double hi = pooled.maxCoeff() + 3.0 * h;
  Eigen::VectorXd grid(grid_size);
  const double step = (hi - lo) / (grid_size - 1);
  for (int k = 0; k < grid_size; ++k) grid[k] = lo + k * step;

  const Eigen::VectorXd pa = detail::kde_on_grid(draws_a, grid, h);
  const Eigen::VectorXd pb = detail::kde_on_grid(draws_b, grid, h);
  const double tv = 0.5 * step * (pa - pb).array().abs().sum();
  return std::clamp(1.0 - tv, 0.0, 1.0);
}

inline SummaryStats summarize(const Eigen::VectorXd& draws) {
  if (draws.size() == 0) throw std::invalid_argument("summarize: empty input");
  SummaryStats s;
  s.mean = draws.mean();
  s.sd = draws.size() > 1
             ? std::sqrt((draws.array() - s.mean).square().sum() / (draws.size() - 1))
             : 0.0;
  std::vector<double> sorted(draws.data(), draws.data() + draws.size());
  std::sort(sorted.begin(), sorted.end());
  s.q025 = empirical_quantile(sorted, 0.025);
  s.median = empirical_quantile(sorted, 0.5);
  s.q975 = empirical_quantile(sorted, 0.975);
  return s;
}

struct EssResultFw {
  double ess = 0.0;
  bool converged = false;
  double half_width = 0.0;
};

// Batch-means effective sample size with the fixed-width convergence rule:
// converged when the 95% half-width for the chain mean is within target.
// Batch size is floor(sqrt(S)).
inline EssResultFw ess_fixed_width(const Eigen::VectorXd& chain, double target_half_width) {
  const int S = static_cast<int>(chain.size());
  if (S < 100) throw std::invalid_argument("ess_fixed_width: need at least 100 draws");
  const int batch = static_cast<int>(std::floor(std::sqrt(static_cast<double>(S))));
  const int n_batches = S / batch;
  const double mean = chain.head(n_batches * batch).mean();

  double var_sample = (chain.head(n_batches * batch).array() - mean).square().sum() /
                      (n_batches * batch - 1);
  double bm = 0.0;
  for (int k = 0; k < n_batches; ++k) {
    const double bmean = chain.segment(k * batch, batch).mean();
    bm += (bmean - mean) * (bmean - mean);
  }
  // Asymptotic variance estimate sigma^2 = b * var(batch means).
  const double sigma2 = batch * bm / (n_batches - 1);

  EssResultFw out;
  const double scale2 = mean * mean + 1.0;
  if (sigma2 <= 1e-24 * scale2 || var_sample <= 1e-24 * scale2) {  // constant chain
    out.ess = static_cast<double>(S);
    out.half_width = 0.0;
    out.converged = true;
    return out;
  }
  out.ess = S * var_sample / sigma2;
  out.half_width = 1.96 * std::sqrt(sigma2 / S);
  out.converged = out.half_width <= target_half_width;
  return out;
}

}  // namespace gwpp

#endif  // GWPP_METRICS_HPP
