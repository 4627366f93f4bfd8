#ifndef GWPP_SYNTHPOP_HPP
#define GWPP_SYNTHPOP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gwpp/car.hpp"
#include "gwpp/matrix_normal.hpp"
#include "gwpp/rng.hpp"

namespace gwpp {

// Configuration of the synthetic finite-population generator. Counts are
// negative binomial with by-response size tau[q] and log mean
// intercept_offset + theta[q][t] (+ gamma[l][q][t] * z when L > 0); theta
// and gamma are drawn from matrix-normal priors with separable covariance
// theta_row_cov (response side) and CAR(T, r)^{-1} (month side).
struct PopulationConfig {
  int N = 0;
  int T = 0;
  int Q = 0;
  int L = 0;  // 0 disables industry random effects
  Eigen::VectorXd tau;
  double intercept_offset = 0.0;
  double r = 0.0;
  Eigen::MatrixXd theta_row_cov;  // Q x Q latent covariance across responses
  std::uint64_t seed = 0;

  void validate() const {
    if (N <= 0 || T < 2 || Q <= 0 || L < 0)
      throw std::invalid_argument("PopulationConfig: N > 0, T >= 2, Q > 0, L >= 0 required");
    if (tau.size() != Q || (tau.array() <= 0.0).any())
      throw std::invalid_argument("PopulationConfig: tau must have Q positive entries");
    if (r < 0.0 || r >= 1.0)
      throw std::invalid_argument("PopulationConfig: r must lie in [0,1)");
    if (theta_row_cov.rows() != Q || theta_row_cov.cols() != Q)
      throw std::invalid_argument("PopulationConfig: theta_row_cov must be Q x Q");
    if (!theta_row_cov.isApprox(theta_row_cov.transpose(), 1e-12))
      throw std::invalid_argument("PopulationConfig: theta_row_cov must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(theta_row_cov);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("PopulationConfig: theta_row_cov must be positive definite");
  }
};

struct FinitePopulation {
  int N = 0, T = 0, Q = 0, L = 0;
  std::vector<long> y;  // (i,t,q) row-major
  Eigen::MatrixXd theta_true;              // Q x T
  std::vector<Eigen::MatrixXd> gamma_true;  // L matrices, Q x T
  Eigen::VectorXd size_measure;            // total count per unit, plus one
  std::vector<int> strata;                 // industry label per unit (0 when L == 0)

  long& yref(int i, int t, int q) { return y[(static_cast<std::size_t>(i) * T + t) * Q + q]; }
  long yval(int i, int t, int q) const {
    return y[(static_cast<std::size_t>(i) * T + t) * Q + q];
  }
};

// The +1 on size_measure keeps every inclusion probability strictly
// positive even for units whose counts are all zero.
inline FinitePopulation generate_population(const PopulationConfig& cfg, Rng& rng) {
  cfg.validate();
  const Eigen::MatrixXd car = build_car_precision(cfg.T, cfg.r).matrix;
  const Eigen::MatrixXd row_prec = spd_inverse(cfg.theta_row_cov);

  FinitePopulation pop;
  pop.N = cfg.N;
  pop.T = cfg.T;
  pop.Q = cfg.Q;
  pop.L = cfg.L;
  pop.theta_true = sample_matrix_normal(Eigen::MatrixXd::Zero(cfg.Q, cfg.T), row_prec, car, rng);
  for (int l = 0; l < cfg.L; ++l) {
    pop.gamma_true.push_back(
        sample_matrix_normal(Eigen::MatrixXd::Zero(cfg.Q, cfg.T), row_prec, car, rng));
  }

  pop.y.assign(static_cast<std::size_t>(cfg.N) * cfg.T * cfg.Q, 0);
  pop.size_measure.resize(cfg.N);
  pop.strata.resize(cfg.N);
  for (int i = 0; i < cfg.N; ++i) {
    const int l = cfg.L > 0 ? i % cfg.L : 0;
    pop.strata[i] = l;
    long total = 0;
    for (int t = 0; t < cfg.T; ++t) {
      for (int q = 0; q < cfg.Q; ++q) {
        double psi = cfg.intercept_offset + pop.theta_true(q, t);
        if (cfg.L > 0) psi += pop.gamma_true[l](q, t);  // unit magnitude covariate
        const long v = rng.negative_binomial(cfg.tau[q], std::exp(psi));
        pop.yref(i, t, q) = v;
        total += v;
      }
    }
    pop.size_measure[i] = static_cast<double>(total) + 1.0;
  }
  return pop;
}

enum class MissingKind { Mcar, ResponseQOnly };

struct MissingRule {
  MissingKind kind = MissingKind::Mcar;
  int q = 0;  // response index for ResponseQOnly
};

// Boolean holdout mask over (unit, month, response) cells; true = held out.
inline std::vector<std::uint8_t> hold_out_missing(int n, int T, int Q, double rate,
                                                  const MissingRule& rule, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("hold_out_missing: rate must lie in [0,1)");
  if (rule.kind == MissingKind::ResponseQOnly && (rule.q < 0 || rule.q >= Q))
    throw std::invalid_argument("hold_out_missing: response index out of range");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * T * Q, 0);
  if (rate == 0.0) return mask;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      for (int q = 0; q < Q; ++q, ++idx) {
        if (rule.kind == MissingKind::ResponseQOnly && q != rule.q) continue;
        if (rng.uniform() < rate) mask[idx] = 1;
      }
    }
  }
  return mask;
}

}  // namespace gwpp

#endif  // GWPP_SYNTHPOP_HPP
