#ifndef GWPP_WISHART_HPP
#define GWPP_WISHART_HPP

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "gwpp/rng.hpp"

namespace gwpp {

// Wishart draw with mean df * scale, via the Bartlett decomposition.
inline Eigen::MatrixXd wishart_draw(double df, const Eigen::MatrixXd& scale, Rng& rng) {
  const int p = static_cast<int>(scale.rows());
  if (df <= p - 1)
    throw std::invalid_argument("wishart_draw: degrees of freedom too small");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("wishart_draw: scale not positive definite");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(df - i));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd la = llt.matrixL() * a;
  Eigen::MatrixXd w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

// Gibbs draw of a separable-precision response factor. The prior is the
// parameter-expanded Wishart with rate matrix 2*nu*diag(a); matrix-normal
// effects with column precision other_prec contribute T columns each:
//
//   P | effects, a ~ Wishart(nu + Q - 1 + m*T, rate = sum_m E_m * other * E_m' + 2 nu diag(a))
inline Eigen::MatrixXd update_precision_wishart(const std::vector<const Eigen::MatrixXd*>& effects,
                                                const Eigen::MatrixXd& other_prec,
                                                const Eigen::VectorXd& a, double nu, Rng& rng) {
  if (effects.empty()) throw std::invalid_argument("update_precision_wishart: no effects");
  const int Q = static_cast<int>(effects.front()->rows());
  const int T = static_cast<int>(effects.front()->cols());
  Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(Q, Q);
  for (const auto* e : effects) rate += (*e) * other_prec * e->transpose();
  rate += 2.0 * nu * Eigen::MatrixXd(a.asDiagonal());
  rate = 0.5 * (rate + rate.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(rate);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("update_precision_wishart: degenerate scale matrix");
  const Eigen::MatrixXd scale = llt.solve(Eigen::MatrixXd::Identity(Q, Q));
  const double df = nu + Q - 1 + static_cast<double>(effects.size()) * T;
  return wishart_draw(df, scale, rng);
}

// Gibbs draw of the Huang-Wand expansion scales given the precision:
// a_q | P ~ Gamma((nu + Q) / 2, 1 + nu * P_qq).
inline Eigen::VectorXd update_huangwand_scales(const Eigen::MatrixXd& P, double nu, Rng& rng) {
  const int Q = static_cast<int>(P.rows());
  Eigen::VectorXd a(Q);
  for (int q = 0; q < Q; ++q) a[q] = rng.gamma(0.5 * (nu + Q), 1.0 + nu * P(q, q));
  return a;
}

}  // namespace gwpp

#endif  // GWPP_WISHART_HPP
