#ifndef GWPP_DESIGN_HPP
#define GWPP_DESIGN_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gwpp/rng.hpp"
#include "gwpp/synthpop.hpp"

namespace gwpp {

struct SurveySample {
  int n = 0, T = 0, Q = 0, L = 0;
  int population_size = 0;
  std::vector<int> unit_ids;  // population indices, 0-based
  Eigen::VectorXd pi;         // inclusion probabilities
  Eigen::VectorXd raw_w;      // 1 / pi
  Eigen::VectorXd norm_w;     // n * raw_w / sum(raw_w)
  std::vector<long> y;        // (i,t,q) row-major over sampled units
  std::vector<std::uint8_t> missing;  // same shape as y; empty = none
  std::vector<int> strata;

  long yval(int i, int t, int q) const {
    return y[(static_cast<std::size_t>(i) * T + t) * Q + q];
  }
  bool is_missing(int i, int t, int q) const {
    if (missing.empty()) return false;
    return missing[(static_cast<std::size_t>(i) * T + t) * Q + q] != 0;
  }
};

enum class WeightMode { SubsetSum, FullSum };

struct SubsetAssignment {
  int K = 0;
  std::vector<std::vector<int>> membership;     // sample indices per subset
  std::vector<std::vector<double>> subset_w;    // aligned with membership
  WeightMode mode = WeightMode::SubsetSum;
};

struct DesignDiagnostics {
  double gamma = 0.0;  // max 1/pi over the sample
  double min_pi = 0.0;
  double sampling_fraction = 0.0;
  double sum_pi = 0.0;
};

// Probability-proportional-to-size inclusion probabilities scaled so
// sum(pi) = n. Units whose scaled probability reaches 1 are capped and the
// remaining target is redistributed over the uncapped units until no
// probability exceeds 1.
inline Eigen::VectorXd compute_inclusion_probs(const Eigen::VectorXd& sizes, int n) {
  const int N = static_cast<int>(sizes.size());
  if (n <= 0 || n > N)
    throw std::invalid_argument("compute_inclusion_probs: invalid request, need 0 < n <= N");
  if ((sizes.array() <= 0.0).any())
    throw std::invalid_argument("compute_inclusion_probs: sizes must be positive");

  Eigen::VectorXd pi = Eigen::VectorXd::Zero(N);
  std::vector<std::uint8_t> capped(N, 0);
  int n_capped = 0;
  for (;;) {
    double free_size = 0.0;
    for (int i = 0; i < N; ++i)
      if (!capped[i]) free_size += sizes[i];
    const double target = static_cast<double>(n - n_capped);
    if (target <= 0.0) break;
    bool changed = false;
    for (int i = 0; i < N; ++i) {
      if (capped[i]) continue;
      const double p = target * sizes[i] / free_size;
      if (p >= 1.0) {
        capped[i] = 1;
        pi[i] = 1.0;
        ++n_capped;
        changed = true;
      } else {
        pi[i] = p;
      }
    }
    if (!changed) break;
  }
  return pi;
}

// Systematic PPS on a uniformly random permutation: exactly round(sum(pi))
// distinct units, each selected with probability pi[i].
inline std::vector<int> draw_sample_pps(const Eigen::VectorXd& pi, Rng& rng) {
  const int N = static_cast<int>(pi.size());
  const double total = pi.sum();
  const long n = std::lround(total);
  if (std::fabs(total - static_cast<double>(n)) > 1e-6)
    throw std::invalid_argument("draw_sample_pps: sum(pi) must be an integer sample size");

  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);

  std::vector<int> selected;
  selected.reserve(n);
  double next = rng.uniform();  // points at next, next+1, ...
  double cum = 0.0;
  for (const int i : perm) {
    cum += pi[i];
    while (next < cum - 1e-12 && static_cast<long>(selected.size()) < n) {
      selected.push_back(i);
      next += 1.0;
    }
  }
  // Guard against the last point slipping past cum by rounding.
  for (int k = N - 1; static_cast<long>(selected.size()) < n && k >= 0; --k) {
    const int i = perm[k];
    if (std::find(selected.begin(), selected.end(), i) == selected.end())
      selected.push_back(i);
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

inline SurveySample build_sample(const FinitePopulation& pop, double f, Rng& rng) {
  if (f <= 0.0 || f > 1.0)
    throw std::invalid_argument("build_sample: sampling fraction must lie in (0,1]");
  const int n = static_cast<int>(std::lround(f * pop.N));
  const Eigen::VectorXd pi_pop = compute_inclusion_probs(pop.size_measure, n);
  const std::vector<int> sel = draw_sample_pps(pi_pop, rng);

  SurveySample s;
  s.n = n;
  s.T = pop.T;
  s.Q = pop.Q;
  s.L = pop.L;
  s.population_size = pop.N;
  s.unit_ids = sel;
  s.pi.resize(n);
  s.raw_w.resize(n);
  s.strata.resize(n);
  s.y.resize(static_cast<std::size_t>(n) * pop.T * pop.Q);
  for (int k = 0; k < n; ++k) {
    const int i = sel[k];
    s.pi[k] = pi_pop[i];
    s.raw_w[k] = 1.0 / pi_pop[i];
    s.strata[k] = pop.strata[i];
    for (int t = 0; t < pop.T; ++t)
      for (int q = 0; q < pop.Q; ++q)
        s.y[(static_cast<std::size_t>(k) * pop.T + t) * pop.Q + q] = pop.yval(i, t, q);
  }
  s.norm_w = static_cast<double>(n) * s.raw_w / s.raw_w.sum();
  return s;
}

inline SubsetAssignment partition_random(const SurveySample& sample, int K, Rng& rng) {
  if (K < 1 || K > sample.n)
    throw std::invalid_argument("partition_random: invalid request, need 1 <= K <= n");
  std::vector<int> perm(sample.n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  SubsetAssignment a;
  a.K = K;
  a.membership.resize(K);
  for (int k = 0; k < sample.n; ++k) a.membership[k % K].push_back(perm[k]);
  for (auto& m : a.membership) std::sort(m.begin(), m.end());
  return a;
}

// Simple random allocation within each stratum, dealt round robin from a
// random starting subset so small strata do not always favor subset 0.
inline SubsetAssignment partition_stratified(const SurveySample& sample, int K, Rng& rng) {
  if (K < 1 || K > sample.n)
    throw std::invalid_argument("partition_stratified: invalid request, need 1 <= K <= n");
  std::map<int, std::vector<int>> by_stratum;
  for (int k = 0; k < sample.n; ++k) by_stratum[sample.strata[k]].push_back(k);

  SubsetAssignment a;
  a.K = K;
  a.membership.resize(K);
  for (auto& [label, members] : by_stratum) {
    (void)label;
    rng.shuffle(members);
    const int start = static_cast<int>(rng.uniform_int(K));
    for (std::size_t k = 0; k < members.size(); ++k)
      a.membership[(start + k) % K].push_back(members[k]);
  }
  for (auto& m : a.membership) std::sort(m.begin(), m.end());
  return a;
}

// Fills subset weights. SubsetSum rescales each subset's raw weights to sum
// to the full sample size n; FullSum keeps the full-sample normalization, so
// each subset's weights sum to roughly n/K.
inline void normalize_weights_subset(const SurveySample& sample, SubsetAssignment& a,
                                     WeightMode mode) {
  a.mode = mode;
  a.subset_w.assign(a.K, {});
  const double full_sum = sample.raw_w.sum();
  for (int j = 0; j < a.K; ++j) {
    double subset_sum = 0.0;
    for (const int k : a.membership[j]) subset_sum += sample.raw_w[k];
    const double denom = (mode == WeightMode::SubsetSum) ? subset_sum : full_sum;
    a.subset_w[j].reserve(a.membership[j].size());
    for (const int k : a.membership[j])
      a.subset_w[j].push_back(static_cast<double>(sample.n) * sample.raw_w[k] / denom);
  }
}

inline DesignDiagnostics design_diagnostics(const SurveySample& sample, int N) {
  if ((sample.pi.array() <= 0.0).any())
    throw std::runtime_error(
        "design_diagnostics: assumption violation, nonpositive inclusion probability");
  DesignDiagnostics d;
  d.min_pi = sample.pi.minCoeff();
  d.gamma = 1.0 / d.min_pi;
  d.sampling_fraction = static_cast<double>(sample.n) / static_cast<double>(N);
  d.sum_pi = sample.pi.sum();
  return d;
}

}  // namespace gwpp

#endif  // GWPP_DESIGN_HPP
