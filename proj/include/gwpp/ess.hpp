#ifndef GWPP_ESS_HPP
#define GWPP_ESS_HPP

#include <Eigen/Dense>
#include <cmath>

#include "gwpp/rng.hpp"

namespace gwpp {

struct EssResult {
  bool accepted = false;
  bool stuck = false;
  int likelihood_evals = 0;
};

// One elliptical slice transition for a mean-zero Gaussian prior. The
// proposal moves along the ellipse through the current state and a fresh
// prior draw, shrinking the angle bracket toward zero until the
// log-likelihood threshold is cleared. If the bracket collapses below
// 1e-12 radians the state is kept and the event counted.
template <typename PriorDraw, typename LogLik>
EssResult ess_update(Eigen::MatrixXd& state, PriorDraw&& draw_prior, LogLik&& log_lik,
                     Rng& rng) {
  EssResult res;
  const Eigen::MatrixXd nu = draw_prior(rng);
  const double logy = log_lik(state) + std::log(rng.uniform());
  ++res.likelihood_evals;

  double angle = rng.uniform(0.0, 2.0 * M_PI);
  double lo = angle - 2.0 * M_PI;
  double hi = angle;
  for (;;) {
    const Eigen::MatrixXd prop = state * std::cos(angle) + nu * std::sin(angle);
    ++res.likelihood_evals;
    if (log_lik(prop) > logy) {
      state = prop;
      res.accepted = true;
      return res;
    }
    if (angle < 0.0) {
      lo = angle;
    } else {
      hi = angle;
    }
    if (hi - lo < 1e-12) {
      res.stuck = true;  // keep the current state
      return res;
    }
    angle = rng.uniform(lo, hi);
  }
}

}  // namespace gwpp

#endif  // GWPP_ESS_HPP
