#ifndef GWPP_RNG_HPP
#define GWPP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace gwpp {

// Deterministic random draws on top of mt19937_64. All variate
// transformations are implemented here rather than with
// std::*_distribution, whose output is implementation-defined; this keeps
// draw sequences stable across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate = 1.0) { return -std::log(uniform()) / rate; }

  // Marsaglia-Tsang; shape < 1 handled by the boost u^(1/shape) identity.
  double gamma(double shape, double rate = 1.0) {
    if (shape <= 0.0 || rate <= 0.0)
      throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double chi_squared(double df) { return gamma(0.5 * df, 0.5); }

  long poisson(double mu) {
    if (mu < 0.0) throw std::invalid_argument("poisson: mean must be nonnegative");
    if (mu == 0.0) return 0;
    if (mu < 30.0) return poisson_inversion(mu);
    return poisson_ptrs(mu);
  }

  // Negative binomial with size tau and mean mu: Var = mu + mu^2/tau.
  // Drawn as a gamma-mixed Poisson.
  long negative_binomial(double tau, double mu) {
    if (tau <= 0.0 || mu < 0.0)
      throw std::invalid_argument("negative_binomial: bad parameters");
    if (mu == 0.0) return 0;
    const double lambda = gamma(tau, tau / mu);
    return poisson(lambda);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

  // Derives a child seed from a base seed, a role tag, and up to two
  // indices. Distinct (role, a, b) triples give independent streams, so the
  // population, the design draw, and every chain can share one base seed.
  static std::uint64_t derive(std::uint64_t base, std::string_view role,
                              std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the role tag
    for (const char c : role) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ull;
    }
    std::uint64_t x = base;
    x = mix(x ^ h);
    x = mix(x ^ (a * 0x9e3779b97f4a7c15ull + 1));
    x = mix(x ^ (b * 0xbf58476d1ce4e5b9ull + 1));
    return x;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  long poisson_inversion(double mu) {
    const double emu = std::exp(-mu);
    double p = 1.0;
    long k = -1;
    do {
      ++k;
      p *= uniform();
    } while (p > emu);
    return k;
  }

  // Hormann's transformed rejection (PTRS), exact for mu >= 10 or so.
  long poisson_ptrs(double mu) {
    const double smu = std::sqrt(mu);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          k * std::log(mu) - mu - std::lgamma(k + 1.0)) {
        return static_cast<long>(k);
      }
    }
  }

  std::mt19937_64 gen_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace gwpp

#endif  // GWPP_RNG_HPP
