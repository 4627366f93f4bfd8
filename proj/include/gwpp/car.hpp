#ifndef GWPP_CAR_HPP
#define GWPP_CAR_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace gwpp {

// Proper conditional autoregressive precision over months: D - r*Omega,
// where Omega is the path-graph adjacency (months t and t+1 are neighbors)
// and D holds its row sums. Positive definite for r in [0,1).
struct CarPrecision {
  int T = 0;
  double r = 0.0;
  Eigen::MatrixXd matrix;
};

inline Eigen::MatrixXd path_adjacency(int T) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(T, T);
  for (int t = 0; t + 1 < T; ++t) {
    omega(t, t + 1) = 1.0;
    omega(t + 1, t) = 1.0;
  }
  return omega;
}

inline CarPrecision build_car_precision(int T, double r) {
  if (T < 2) throw std::invalid_argument("build_car_precision: invalid dimension, T must be >= 2");
  if (r < 0.0 || r >= 1.0)
    throw std::invalid_argument("build_car_precision: invalid parameter, r must lie in [0,1)");
  const Eigen::MatrixXd omega = path_adjacency(T);
  const Eigen::VectorXd d = omega.rowwise().sum();
  CarPrecision out;
  out.T = T;
  out.r = r;
  out.matrix = Eigen::MatrixXd(d.asDiagonal()) - r * omega;
  return out;
}

// Precomputed pieces of log|D - r*Omega| so a slice sampler over r only
// pays O(T) per evaluation: log|D - r Omega| = log|D| + sum_i log(1 - r*lambda_i)
// with lambda_i the eigenvalues of D^{-1/2} Omega D^{-1/2}.
class CarLogDet {
 public:
  explicit CarLogDet(int T) {
    const Eigen::MatrixXd omega = path_adjacency(T);
    const Eigen::VectorXd d = omega.rowwise().sum();
    log_det_d_ = d.array().log().sum();
    const Eigen::VectorXd dis = d.array().rsqrt();
    const Eigen::MatrixXd m = dis.asDiagonal() * omega * dis.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    lambda_ = es.eigenvalues();
  }

  double operator()(double r) const {
    double s = log_det_d_;
    for (int i = 0; i < lambda_.size(); ++i) s += std::log1p(-r * lambda_[i]);
    return s;
  }

 private:
  Eigen::VectorXd lambda_;
  double log_det_d_ = 0.0;
};

}  // namespace gwpp

#endif  // GWPP_CAR_HPP
