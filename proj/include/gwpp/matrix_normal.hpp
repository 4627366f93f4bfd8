#ifndef GWPP_MATRIX_NORMAL_HPP
#define GWPP_MATRIX_NORMAL_HPP

#include <Eigen/Dense>
#include <stdexcept>

#include "gwpp/rng.hpp"

namespace gwpp {

inline Eigen::MatrixXd standard_normal_matrix(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd z(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) z(i, j) = rng.normal();
  return z;
}

// Draw from the matrix normal with separable precision: X = mean + A Z B',
// where A A' = row_prec^{-1} and B B' = col_prec^{-1}. Both precisions are
// verified SPD through their Cholesky factorizations.
inline Eigen::MatrixXd sample_matrix_normal(const Eigen::MatrixXd& mean,
                                            const Eigen::MatrixXd& row_prec,
                                            const Eigen::MatrixXd& col_prec,
                                            Rng& rng) {
  if (mean.rows() != row_prec.rows() || mean.cols() != col_prec.rows())
    throw std::invalid_argument("sample_matrix_normal: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt_row(row_prec);
  if (llt_row.info() != Eigen::Success)
    throw std::runtime_error("sample_matrix_normal: row precision not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt_col(col_prec);
  if (llt_col.info() != Eigen::Success)
    throw std::runtime_error("sample_matrix_normal: column precision not positive definite");

  Eigen::MatrixXd z = standard_normal_matrix(static_cast<int>(mean.rows()),
                                             static_cast<int>(mean.cols()), rng);
  // A = Lr^{-T}: solve Lr' W = Z.
  Eigen::MatrixXd w =
      llt_row.matrixU().solve(z);
  // X = W * B' with B' = Lc^{-1}: solve Lc' X' = W'.
  Eigen::MatrixXd xt = llt_col.matrixU().solve(w.transpose());
  return mean + xt.transpose();
}

// Inverse of a small SPD matrix via Cholesky.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("spd_inverse: matrix not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace gwpp

#endif  // GWPP_MATRIX_NORMAL_HPP
