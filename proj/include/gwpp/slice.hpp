#ifndef GWPP_SLICE_HPP
#define GWPP_SLICE_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

#include "gwpp/rng.hpp"

namespace gwpp {

struct SliceOptions {
  double step_width = 1.0;
  int max_step_out = 50;
  int max_shrink = 1000;
};

// One univariate slice-sampler transition (step out, then shrink),
// restricted to the open interval (lo, hi). Invariant distribution is
// proportional to exp(log_density).
template <typename LogDensity>
double slice_update_scalar(double current, LogDensity&& log_density, double lo, double hi,
                           const SliceOptions& opt, Rng& rng) {
  const double f0 = log_density(current);
  if (!std::isfinite(f0))
    throw std::runtime_error("slice_update_scalar: invalid state, log density not finite");
  const double logy = f0 + std::log(rng.uniform());

  const double w = opt.step_width;
  double left = current - w * rng.uniform();
  double right = left + w;
  left = std::max(left, lo);
  right = std::min(right, hi);

  for (int s = 0; s < opt.max_step_out && left > lo; ++s) {
    if (log_density(left) <= logy) break;
    left = std::max(left - w, lo);
  }
  for (int s = 0; s < opt.max_step_out && right < hi; ++s) {
    if (log_density(right) <= logy) break;
    right = std::min(right + w, hi);
  }

  for (int s = 0; s < opt.max_shrink; ++s) {
    const double x = rng.uniform(left, right);
    if (log_density(x) > logy) return x;
    if (x < current) {
      left = x;
    } else {
      right = x;
    }
  }
  return current;  // interval collapsed numerically; keep the state
}

template <typename LogDensity>
double slice_update_scalar(double current, LogDensity&& log_density, double lo, double hi,
                           Rng& rng) {
  return slice_update_scalar(current, std::forward<LogDensity>(log_density), lo, hi,
                             SliceOptions{}, rng);
}

}  // namespace gwpp

#endif  // GWPP_SLICE_HPP
