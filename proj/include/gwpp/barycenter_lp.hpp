#ifndef GWPP_BARYCENTER_LP_HPP
#define GWPP_BARYCENTER_LP_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "gwpp/barycenter.hpp"
#include "gwpp/simplex.hpp"

namespace gwpp {

// Pooled atoms snapped to a G-point equispaced grid; returns the grid and
// one weight column per measure.
struct SnappedMeasures {
  Eigen::VectorXd support;   // G ascending points
  Eigen::MatrixXd weights;   // G x K, columns sum to 1
};

inline SnappedMeasures snap_measures_to_grid(const std::vector<EmpiricalMeasure1D>& measures,
                                             int G) {
  if (measures.empty() || G < 2)
    throw std::invalid_argument("snap_measures_to_grid: need measures and G >= 2");
  double lo = measures.front().atoms.minCoeff();
  double hi = measures.front().atoms.maxCoeff();
  for (const auto& m : measures) {
    m.validate();
    lo = std::min(lo, m.atoms.minCoeff());
    hi = std::max(hi, m.atoms.maxCoeff());
  }
  if (hi <= lo) hi = lo + 1.0;
  SnappedMeasures out;
  out.support.resize(G);
  const double step = (hi - lo) / (G - 1);
  for (int g = 0; g < G; ++g) out.support[g] = lo + g * step;
  out.weights = Eigen::MatrixXd::Zero(G, static_cast<int>(measures.size()));
  for (int j = 0; j < static_cast<int>(measures.size()); ++j) {
    const auto& m = measures[j];
    const int n = static_cast<int>(m.atoms.size());
    const double uni = 1.0 / n;
    for (int k = 0; k < n; ++k) {
      int g = static_cast<int>(std::lround((m.atoms[k] - lo) / step));
      g = std::min(std::max(g, 0), G - 1);
      out.weights(g, j) += m.weights.size() ? m.weights[k] : uni;
    }
    out.weights.col(j) /= out.weights.col(j).sum();
  }
  return out;
}

struct LpBarycenter {
  Eigen::VectorXd weights;  // barycenter weights on the support
  double objective = 0.0;   // (1/K) sum_j W2^2(barycenter, measure_j)
};

// Discrete W2 barycenter on a fixed shared support, solved to optimality as
// the joint transport-plan linear program. Decision variables are the
// barycenter weights b plus one transport plan per input measure; plan j
// couples b (rows) to measure j (columns, restricted to its nonzero
// support). One column constraint per block is dropped as redundant.
inline LpBarycenter barycenter_lp_discrete(const Eigen::MatrixXd& measure_weights,
                                           const Eigen::VectorXd& support) {
  const int G = static_cast<int>(support.size());
  const int K = static_cast<int>(measure_weights.cols());
  if (measure_weights.rows() != G)
    throw std::invalid_argument("barycenter_lp_discrete: weights/support mismatch");
  if (G > 200 || K > 5 || K < 1)
    throw std::invalid_argument("barycenter_lp_discrete: invalid request, oracle scale is G <= 200, K <= 5");
  for (int j = 0; j < K; ++j) {
    if (std::fabs(measure_weights.col(j).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("barycenter_lp_discrete: measure weights must sum to 1");
  }

  std::vector<std::vector<int>> nz(K);  // nonzero target indices per measure
  for (int j = 0; j < K; ++j)
    for (int g = 0; g < G; ++g)
      if (measure_weights(g, j) > 0.0) nz[j].push_back(g);

  // Row layout: R(j,g) = j*G + g, then the kept column constraints, then the
  // normalization row.
  int n_col_rows = 0;
  for (int j = 0; j < K; ++j) n_col_rows += static_cast<int>(nz[j].size()) - 1;
  const int m = K * G + n_col_rows + 1;
  const int norm_row = m - 1;

  LpProblem lp;
  lp.m = m;
  lp.b = Eigen::VectorXd::Zero(m);
  lp.b[norm_row] = 1.0;

  std::vector<std::vector<int>> col_row(K);  // row index per kept column constraint
  {
    int r = K * G;
    for (int j = 0; j < K; ++j) {
      col_row[j].assign(nz[j].size(), -1);
      for (std::size_t h = 0; h + 1 < nz[j].size(); ++h) {
        col_row[j][h] = r;
        lp.b[r] = measure_weights(nz[j][h], j);
        ++r;
      }
    }
  }

  // Variables: b_g first, then the plan entries.
  std::vector<double> costs;
  for (int g = 0; g < G; ++g) {
    std::vector<std::pair<int, double>> col;
    col.reserve(K + 1);
    for (int j = 0; j < K; ++j) col.emplace_back(j * G + g, -1.0);
    col.emplace_back(norm_row, 1.0);
    lp.cols.push_back(std::move(col));
    costs.push_back(0.0);
  }
  const double k_inv = 1.0 / K;
  for (int j = 0; j < K; ++j) {
    for (int g = 0; g < G; ++g) {
      for (std::size_t h = 0; h < nz[j].size(); ++h) {
        std::vector<std::pair<int, double>> col;
        col.emplace_back(j * G + g, 1.0);
        if (col_row[j][h] >= 0) col.emplace_back(col_row[j][h], 1.0);
        lp.cols.push_back(std::move(col));
        const double d = support[g] - support[nz[j][h]];
        costs.push_back(k_inv * d * d);
      }
    }
  }
  lp.c = Eigen::Map<Eigen::VectorXd>(costs.data(), static_cast<long>(costs.size()));

  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("barycenter_lp_discrete: solver failure");

  LpBarycenter out;
  out.weights = sol.x.head(G);
  const double s = out.weights.sum();
  out.weights /= s;
  out.objective = sol.objective;
  return out;
}

}  // namespace gwpp

#endif  // GWPP_BARYCENTER_LP_HPP
