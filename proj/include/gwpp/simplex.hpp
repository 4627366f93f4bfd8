#ifndef GWPP_SIMPLEX_HPP
#define GWPP_SIMPLEX_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace gwpp {

// Equality-form linear program: minimize c'x subject to A x = b, x >= 0,
// with A stored by sparse columns.
struct LpProblem {
  int m = 0;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  std::vector<std::vector<std::pair<int, double>>> cols;

  int n() const { return static_cast<int>(cols.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Two-phase revised simplex with a dense basis inverse. Dantzig pricing,
// falling back to Bland's rule after a run of degenerate pivots so cycling
// cannot occur. Redundant equality rows are tolerated: their artificial
// variables simply stay basic at zero.
class RevisedSimplex {
 public:
  explicit RevisedSimplex(const LpProblem& p) : p_(p), m_(p.m), n_(p.n()) {
    b_ = p.b;
    row_sign_.assign(m_, 1.0);
    for (int i = 0; i < m_; ++i) {
      if (b_[i] < 0.0) {
        b_[i] = -b_[i];
        row_sign_[i] = -1.0;
      }
    }
  }

  LpSolution solve(long max_iters = 500000) {
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;  // artificials
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    xb_ = b_;
    in_basis_flag_.assign(n_, false);

    LpSolution out;
    if (!run_phase(true, max_iters)) {
      out.status = LpStatus::IterationLimit;
      return out;
    }
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (basis_[i] >= n_) infeas += xb_[i];
    if (infeas > 1e-7) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    if (!run_phase(false, max_iters)) {
      if (unbounded_) {
        out.status = LpStatus::Unbounded;
        return out;
      }
      out.status = LpStatus::IterationLimit;
      return out;
    }

    out.status = LpStatus::Optimal;
    out.x = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < m_; ++i)
      if (basis_[i] < n_) out.x[basis_[i]] = std::max(0.0, xb_[i]);
    out.objective = p_.c.dot(out.x);
    return out;
  }

 private:
  double cost_of(int j, bool phase1) const {
    if (phase1) return j >= n_ ? 1.0 : 0.0;
    return j >= n_ ? 0.0 : p_.c[j];
  }

  double column_dot(int j, const Eigen::VectorXd& y) const {
    if (j >= n_) return y[j - n_];
    double s = 0.0;
    for (const auto& [i, v] : p_.cols[j]) s += y[i] * row_sign_[i] * v;
    return s;
  }

  Eigen::VectorXd ftran(int j) const {
    if (j >= n_) return binv_.col(j - n_);
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m_);
    for (const auto& [i, v] : p_.cols[j]) d += (row_sign_[i] * v) * binv_.col(i);
    return d;
  }

  void refactorize() {
    Eigen::MatrixXd B(m_, m_);
    for (int k = 0; k < m_; ++k) {
      const int j = basis_[k];
      Eigen::VectorXd col = Eigen::VectorXd::Zero(m_);
      if (j >= n_) {
        col[j - n_] = 1.0;
      } else {
        for (const auto& [i, v] : p_.cols[j]) col[i] = row_sign_[i] * v;
      }
      B.col(k) = col;
    }
    binv_ = B.partialPivLu().inverse();
    xb_ = binv_ * b_;
  }

  bool run_phase(bool phase1, long max_iters) {
    unbounded_ = false;
    int degenerate_run = 0;
    for (long iter = 0; iter < max_iters; ++iter) {
      if (iter > 0 && iter % 512 == 0) refactorize();

      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = cost_of(basis_[i], phase1);
      const Eigen::VectorXd y = binv_.transpose() * cb;

      const bool bland = degenerate_run > 256;
      int enter = -1;
      double best = -1e-9;
      for (int j = 0; j < n_; ++j) {
        if (in_basis_flag_[j]) continue;
        const double r = cost_of(j, phase1) - column_dot(j, y);
        if (r < best) {
          if (bland) {
            enter = j;
            break;
          }
          best = r;
          enter = j;
        }
      }
      if (enter < 0) return true;  // phase optimum

      const Eigen::VectorXd d = ftran(enter);
      int leave = -1;
      double theta = 0.0;
      for (int i = 0; i < m_; ++i) {
        if (d[i] > 1e-10) {
          const double ratio = xb_[i] / d[i];
          if (leave < 0 || ratio < theta - 1e-12 ||
              (ratio < theta + 1e-12 && basis_[i] > basis_[leave])) {
            // Ties prefer kicking out artificials / higher indices.
            theta = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) {
        if (phase1) return true;  // cannot happen with bounded artificials
        unbounded_ = true;
        return false;
      }
      degenerate_run = theta < 1e-12 ? degenerate_run + 1 : 0;

      // Pivot: update basic values and the explicit inverse.
      xb_ -= theta * d;
      xb_[leave] = theta;
      set_basis_flag(basis_[leave], false);
      set_basis_flag(enter, true);
      basis_[leave] = enter;
      const double piv = d[leave];
      binv_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        const double f = d[i];
        if (f != 0.0) binv_.row(i) -= f * binv_.row(leave);
      }
      for (int i = 0; i < m_; ++i)
        if (xb_[i] < 0.0 && xb_[i] > -1e-9) xb_[i] = 0.0;
    }
    return false;
  }

  void set_basis_flag(int j, bool v) {
    if (j < n_) in_basis_flag_[j] = v;
  }

  const LpProblem& p_;
  int m_, n_;
  Eigen::VectorXd b_, xb_;
  std::vector<double> row_sign_;
  std::vector<int> basis_;
  std::vector<char> in_basis_flag_;
  Eigen::MatrixXd binv_;
  bool unbounded_ = false;
};

inline LpSolution solve_lp(const LpProblem& p, long max_iters = 500000) {
  RevisedSimplex s(p);
  return s.solve(max_iters);
}

}  // namespace gwpp

#endif  // GWPP_SIMPLEX_HPP
