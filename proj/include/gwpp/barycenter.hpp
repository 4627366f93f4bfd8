#ifndef GWPP_BARYCENTER_HPP
#define GWPP_BARYCENTER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwpp/nbmodel.hpp"

namespace gwpp {

// Weighted point masses on the real line; empty weights mean uniform.
struct EmpiricalMeasure1D {
  Eigen::VectorXd atoms;
  Eigen::VectorXd weights;

  static EmpiricalMeasure1D uniform(Eigen::VectorXd atoms) {
    EmpiricalMeasure1D m;
    m.atoms = std::move(atoms);
    return m;
  }

  void validate() const {
    if (atoms.size() == 0) throw std::invalid_argument("EmpiricalMeasure1D: empty measure");
    if (!atoms.allFinite()) throw std::invalid_argument("EmpiricalMeasure1D: nonfinite atom");
    if (weights.size() != 0) {
      if (weights.size() != atoms.size())
        throw std::invalid_argument("EmpiricalMeasure1D: weight/atom mismatch");
      if ((weights.array() <= 0.0).any())
        throw std::invalid_argument("EmpiricalMeasure1D: weights must be positive");
      if (std::fabs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("EmpiricalMeasure1D: weights must sum to 1");
    }
  }
};

namespace detail {

struct SortedMeasure {
  std::vector<double> x;  // ascending atoms
  std::vector<double> w;  // normalized weights
  std::vector<double> cum;
};

inline SortedMeasure sorted_measure(const EmpiricalMeasure1D& m) {
  m.validate();
  const int n = static_cast<int>(m.atoms.size());
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return m.atoms[a] < m.atoms[b]; });
  SortedMeasure s;
  s.x.resize(n);
  s.w.resize(n);
  const double uni = 1.0 / n;
  for (int k = 0; k < n; ++k) {
    s.x[k] = m.atoms[idx[k]];
    s.w[k] = m.weights.size() ? m.weights[idx[k]] : uni;
  }
  s.cum.resize(n);
  double c = 0.0;
  for (int k = 0; k < n; ++k) {
    c += s.w[k];
    s.cum[k] = c;
  }
  s.cum[n - 1] = 1.0;
  return s;
}

// Quantile by linear interpolation between order statistics, with atom k
// anchored at level (cum_{k-1} + w_k/2). For S uniform atoms this places
// atom k at (k - 0.5)/S, so a grid of those levels reproduces the sorted
// atoms exactly.
inline double quantile_interp(const SortedMeasure& s, double u) {
  const int n = static_cast<int>(s.x.size());
  double prev_cum = 0.0;
  // positions p_k = prev_cum + w_k / 2
  double p_lo = s.w[0] * 0.5;
  if (u <= p_lo) return s.x[0];
  for (int k = 0; k + 1 < n; ++k) {
    const double p_k = prev_cum + 0.5 * s.w[k];
    prev_cum += s.w[k];
    const double p_next = prev_cum + 0.5 * s.w[k + 1];
    if (u <= p_next) {
      const double f = (u - p_k) / (p_next - p_k);
      return s.x[k] + f * (s.x[k + 1] - s.x[k]);
    }
  }
  return s.x[n - 1];
}

}  // namespace detail

// Exact order-2 Wasserstein distance between two empirical measures via
// their right-continuous quantile functions on the merged level grid.
inline double w2_empirical_1d(const EmpiricalMeasure1D& a, const EmpiricalMeasure1D& b) {
  const detail::SortedMeasure sa = detail::sorted_measure(a);
  const detail::SortedMeasure sb = detail::sorted_measure(b);
  double total = 0.0;
  double level = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < sa.x.size() && ib < sb.x.size()) {
    const double next = std::min(sa.cum[ia], sb.cum[ib]);
    const double diff = sa.x[ia] - sb.x[ib];
    total += (next - level) * diff * diff;
    level = next;
    if (sa.cum[ia] <= next + 1e-15) ++ia;
    if (ib < sb.x.size() && sb.cum[ib] <= next + 1e-15) ++ib;
  }
  return std::sqrt(std::max(0.0, total));
}

// One-dimensional W2 barycenter by quantile averaging: the barycenter
// quantile function is the mean of the subset quantile functions, read off
// at grid_size midpoint levels.
inline EmpiricalMeasure1D barycenter_quantile(const std::vector<EmpiricalMeasure1D>& measures,
                                              int grid_size) {
  if (measures.empty()) throw std::invalid_argument("barycenter_quantile: need K >= 1 measures");
  if (grid_size < 1) throw std::invalid_argument("barycenter_quantile: grid_size must be positive");
  std::vector<detail::SortedMeasure> sorted;
  sorted.reserve(measures.size());
  for (const auto& m : measures) sorted.push_back(detail::sorted_measure(m));

  Eigen::VectorXd atoms(grid_size);
  const double k_inv = 1.0 / static_cast<double>(measures.size());
  for (int i = 0; i < grid_size; ++i) {
    const double u = (i + 0.5) / static_cast<double>(grid_size);
    double acc = 0.0;
    for (const auto& s : sorted) acc += detail::quantile_interp(s, u);
    atoms[i] = acc * k_inv;
  }
  return EmpiricalMeasure1D::uniform(std::move(atoms));
}

struct BarycenterResult {
  std::vector<std::string> names;           // one entry per marginal
  std::vector<Eigen::VectorXd> combined;    // sorted combined atoms
  Eigen::MatrixXd w2_to_subsets;            // marginals x K
  std::string method;
};

// Applies quantile averaging independently to every parameter column of K
// subset chains. All inputs must expose the same parameter names; the
// output draw count is the smallest retained count across subsets.
inline ChainDraws combine_marginals(const std::vector<ChainDraws>& chains,
                                    BarycenterResult* detail_out = nullptr) {
  if (chains.empty()) throw std::invalid_argument("combine_marginals: no chains");
  const auto& names = chains.front().names;
  for (const auto& ch : chains) {
    if (ch.names != names)
      throw std::invalid_argument("combine_marginals: schema mismatch across subset draws");
    if (ch.draws.rows() == 0) throw std::invalid_argument("combine_marginals: empty draws");
  }
  int grid = static_cast<int>(chains.front().draws.rows());
  for (const auto& ch : chains) grid = std::min(grid, static_cast<int>(ch.draws.rows()));

  const int P = static_cast<int>(names.size());
  const int K = static_cast<int>(chains.size());
  ChainDraws out;
  out.names = names;
  out.draws.resize(grid, P);
  if (detail_out) {
    detail_out->names = names;
    detail_out->combined.clear();
    detail_out->w2_to_subsets.resize(P, K);
    detail_out->method = "quantile";
  }
  for (int p = 0; p < P; ++p) {
    std::vector<EmpiricalMeasure1D> ms;
    ms.reserve(K);
    for (const auto& ch : chains) ms.push_back(EmpiricalMeasure1D::uniform(ch.draws.col(p)));
    const EmpiricalMeasure1D bc = barycenter_quantile(ms, grid);
    out.draws.col(p) = bc.atoms;
    if (detail_out) {
      detail_out->combined.push_back(bc.atoms);
      for (int j = 0; j < K; ++j)
        detail_out->w2_to_subsets(p, j) = w2_empirical_1d(bc, ms[j]);
    }
  }
  out.meta.method = "quantile";
  out.meta.K = K;
  out.meta.iterations = chains.front().meta.iterations;
  out.meta.burn_in = chains.front().meta.burn_in;
  out.meta.thin = chains.front().meta.thin;
  out.meta.config_hash = chains.front().meta.config_hash;
  return out;
}

}  // namespace gwpp

#endif  // GWPP_BARYCENTER_HPP
