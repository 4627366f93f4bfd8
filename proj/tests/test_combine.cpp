#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "gwpp/barycenter.hpp"
#include "gwpp/barycenter_lp.hpp"
#include "gwpp/metrics.hpp"
#include "gwpp/rng.hpp"
#include "gwpp/simplex.hpp"

using Catch::Approx;
using namespace gwpp;

namespace {

EmpiricalMeasure1D gaussian_measure(Rng& rng, double mean, double sd, int n) {
  Eigen::VectorXd atoms(n);
  for (int i = 0; i < n; ++i) atoms[i] = mean + sd * rng.normal();
  return EmpiricalMeasure1D::uniform(std::move(atoms));
}

double barycenter_objective(const EmpiricalMeasure1D& bary,
                            const std::vector<EmpiricalMeasure1D>& measures) {
  double acc = 0.0;
  for (const auto& m : measures) {
    const double d = w2_empirical_1d(bary, m);
    acc += d * d;
  }
  return acc / measures.size();
}

}  // namespace

// ---------------------------------------------------------------------------
// w2 distance

TEST_CASE("w2 of a measure with itself is zero") {
  Eigen::VectorXd atoms(4);
  atoms << 1.0, -2.0, 0.5, 3.0;
  const auto m = EmpiricalMeasure1D::uniform(atoms);
  REQUIRE(w2_empirical_1d(m, m) == Approx(0.0).margin(1e-15));
}

TEST_CASE("w2 between point masses is their distance") {
  const auto a = EmpiricalMeasure1D::uniform(Eigen::VectorXd::Zero(1));
  const auto b = EmpiricalMeasure1D::uniform(Eigen::VectorXd::Constant(1, 3.0));
  REQUIRE(w2_empirical_1d(a, b) == Approx(3.0));
}

TEST_CASE("w2 between gaussian samples matches the closed form") {
  Rng rng(100);
  const int n = 50000;
  const auto a = gaussian_measure(rng, 0.0, 1.0, n);
  const auto b = gaussian_measure(rng, 2.0, 1.0, n);
  REQUIRE(w2_empirical_1d(a, b) == Approx(2.0).margin(0.05));
  const auto c = gaussian_measure(rng, 0.0, 2.0, n);
  REQUIRE(w2_empirical_1d(a, c) == Approx(1.0).margin(0.05));
}

TEST_CASE("w2 handles unequal sizes and weights") {
  // {0, 1} uniform vs {0.5} point mass: W2^2 = 0.5*(0.25) + 0.5*(0.25)
  Eigen::VectorXd atoms(2);
  atoms << 0.0, 1.0;
  const auto a = EmpiricalMeasure1D::uniform(atoms);
  const auto b = EmpiricalMeasure1D::uniform(Eigen::VectorXd::Constant(1, 0.5));
  REQUIRE(w2_empirical_1d(a, b) == Approx(0.5));

  EmpiricalMeasure1D c;
  c.atoms = Eigen::VectorXd(2);
  c.atoms << 0.0, 1.0;
  c.weights = Eigen::VectorXd(2);
  c.weights << 0.75, 0.25;
  // monotone coupling against the point mass at 0.5
  REQUIRE(w2_empirical_1d(c, b) == Approx(std::sqrt(0.75 * 0.25 + 0.25 * 0.25)));
}

TEST_CASE("w2 satisfies the metric axioms on random triples") {
  Rng rng(101);
  for (int rep = 0; rep < 1000; ++rep) {
    const int na = 2 + static_cast<int>(rng.uniform_int(8));
    const int nb = 2 + static_cast<int>(rng.uniform_int(8));
    const int nc = 2 + static_cast<int>(rng.uniform_int(8));
    const auto a = gaussian_measure(rng, rng.normal(), 1.0, na);
    const auto b = gaussian_measure(rng, rng.normal(), 1.0, nb);
    const auto c = gaussian_measure(rng, rng.normal(), 1.0, nc);
    const double ab = w2_empirical_1d(a, b);
    const double ba = w2_empirical_1d(b, a);
    REQUIRE(ab == Approx(ba).margin(1e-12));
    REQUIRE(w2_empirical_1d(a, c) <= ab + w2_empirical_1d(b, c) + 1e-9);
  }
  // zero iff equal as sorted multisets
  Eigen::VectorXd x(3), y(3);
  x << 3.0, 1.0, 2.0;
  y << 1.0, 2.0, 3.0;
  REQUIRE(w2_empirical_1d(EmpiricalMeasure1D::uniform(x), EmpiricalMeasure1D::uniform(y)) ==
          Approx(0.0).margin(1e-15));
  y[0] = 1.001;
  REQUIRE(w2_empirical_1d(EmpiricalMeasure1D::uniform(x), EmpiricalMeasure1D::uniform(y)) >
          0.0);
}

// ---------------------------------------------------------------------------
// quantile barycenter

TEST_CASE("single-measure barycenter is the sorted input") {
  Eigen::VectorXd atoms(4);
  atoms << 2.0, -1.0, 0.0, 5.0;
  const auto bc = barycenter_quantile({EmpiricalMeasure1D::uniform(atoms)}, 4);
  Eigen::VectorXd expect(4);
  expect << -1.0, 0.0, 2.0, 5.0;
  REQUIRE(bc.atoms.isApprox(expect));
}

TEST_CASE("barycenter of two point masses is their midpoint") {
  const auto a = EmpiricalMeasure1D::uniform(Eigen::VectorXd::Zero(1));
  const auto b = EmpiricalMeasure1D::uniform(Eigen::VectorXd::Constant(1, 2.0));
  const auto bc = barycenter_quantile({a, b}, 1);
  REQUIRE(bc.atoms.size() == 1);
  REQUIRE(bc.atoms[0] == Approx(1.0));
}

TEST_CASE("barycenter of shifted gaussians recovers the central gaussian") {
  Rng rng(102);
  const int n = 10000;
  const auto bc = barycenter_quantile({gaussian_measure(rng, -1.0, 1.0, n),
                                       gaussian_measure(rng, 0.0, 1.0, n),
                                       gaussian_measure(rng, 1.0, 1.0, n)},
                                      n);
  REQUIRE(bc.atoms.mean() == Approx(0.0).margin(0.05));
  const double var = (bc.atoms.array() - bc.atoms.mean()).square().sum() / (n - 1);
  REQUIRE(var == Approx(1.0).epsilon(0.05));
}

TEST_CASE("equal-count barycenter is the mean of sorted atom vectors") {
  Rng rng(103);
  const int S = 37;
  std::vector<EmpiricalMeasure1D> ms;
  std::vector<Eigen::VectorXd> sorted;
  for (int j = 0; j < 3; ++j) {
    auto m = gaussian_measure(rng, j * 0.7, 1.0 + 0.2 * j, S);
    Eigen::VectorXd s = m.atoms;
    std::sort(s.data(), s.data() + S);
    sorted.push_back(s);
    ms.push_back(std::move(m));
  }
  const auto bc = barycenter_quantile(ms, S);
  const Eigen::VectorXd expect = (sorted[0] + sorted[1] + sorted[2]) / 3.0;
  REQUIRE(bc.atoms.isApprox(expect, 1e-12));
}

TEST_CASE("quantile barycenter is translation and scale equivariant") {
  Rng rng(104);
  std::vector<EmpiricalMeasure1D> ms, shifted, scaled;
  for (int j = 0; j < 3; ++j) {
    const auto m = gaussian_measure(rng, j * 1.0, 1.0, 25);
    EmpiricalMeasure1D sh, sc;
    sh.atoms = m.atoms.array() + 4.5;
    sc.atoms = m.atoms.array() * 3.0;
    ms.push_back(m);
    shifted.push_back(sh);
    scaled.push_back(sc);
  }
  const auto b0 = barycenter_quantile(ms, 25);
  const auto bs = barycenter_quantile(shifted, 25);
  const auto bc = barycenter_quantile(scaled, 25);
  REQUIRE(bs.atoms.isApprox(Eigen::VectorXd(b0.atoms.array() + 4.5), 1e-12));
  REQUIRE(bc.atoms.isApprox(Eigen::VectorXd(b0.atoms.array() * 3.0), 1e-12));
}

TEST_CASE("quantile barycenter beats random perturbed candidates") {
  Rng rng(105);
  for (int rep = 0; rep < 10; ++rep) {
    const int K = 1 + static_cast<int>(rng.uniform_int(3));
    const int S = 10 + static_cast<int>(rng.uniform_int(41));
    std::vector<EmpiricalMeasure1D> ms;
    for (int j = 0; j < K; ++j) ms.push_back(gaussian_measure(rng, rng.normal(), 1.0, S));
    const auto bc = barycenter_quantile(ms, S);
    const double best = barycenter_objective(bc, ms);
    for (int c = 0; c < 100; ++c) {
      EmpiricalMeasure1D cand;
      cand.atoms = bc.atoms;
      for (int i = 0; i < S; ++i) cand.atoms[i] += 0.3 * rng.normal();
      REQUIRE(barycenter_objective(cand, ms) >= best - 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// combine_marginals

namespace {

ChainDraws fake_draws(const std::vector<std::string>& names, const Eigen::MatrixXd& m) {
  ChainDraws d;
  d.names = names;
  d.draws = m;
  return d;
}

}  // namespace

TEST_CASE("combining identical chains returns the sorted common draws") {
  Rng rng(106);
  Eigen::MatrixXd m(20, 2);
  for (int i = 0; i < 20; ++i) {
    m(i, 0) = rng.normal();
    m(i, 1) = rng.normal() + 3.0;
  }
  const auto d = fake_draws({"theta[1][1]", "tau[1]"}, m);
  const auto combined = combine_marginals({d, d, d});
  for (int p = 0; p < 2; ++p) {
    Eigen::VectorXd sorted = m.col(p);
    std::sort(sorted.data(), sorted.data() + sorted.size());
    REQUIRE(combined.draws.col(p).isApprox(sorted, 1e-12));
  }
  REQUIRE(combined.meta.method == "quantile");
  REQUIRE(combined.meta.K == 3);
}

TEST_CASE("combining is equivariant under a common shift") {
  Rng rng(107);
  std::vector<ChainDraws> chains, shifted;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd m(15, 1);
    for (int i = 0; i < 15; ++i) m(i, 0) = rng.normal() + j;
    chains.push_back(fake_draws({"theta[1][1]"}, m));
    shifted.push_back(fake_draws({"theta[1][1]"}, m.array() + 11.25));
  }
  const auto a = combine_marginals(chains);
  const auto b = combine_marginals(shifted);
  REQUIRE(b.draws.isApprox(Eigen::MatrixXd(a.draws.array() + 11.25), 1e-12));
}

TEST_CASE("combining rejects mismatched parameter names") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(12, 1);
  const auto a = fake_draws({"theta[1][1]"}, m);
  const auto b = fake_draws({"theta[2][1]"}, m);
  REQUIRE_THROWS_AS(combine_marginals({a, b}), std::invalid_argument);
}

TEST_CASE("combined draw count is the smallest subset count") {
  Rng rng(108);
  Eigen::MatrixXd m1(30, 1), m2(18, 1);
  for (int i = 0; i < 30; ++i) m1(i, 0) = rng.normal();
  for (int i = 0; i < 18; ++i) m2(i, 0) = rng.normal();
  BarycenterResult detail;
  const auto combined =
      combine_marginals({fake_draws({"tau[1]"}, m1), fake_draws({"tau[1]"}, m2)}, &detail);
  REQUIRE(combined.draws.rows() == 18);
  REQUIRE(detail.w2_to_subsets.rows() == 1);
  REQUIRE(detail.w2_to_subsets.cols() == 2);
  REQUIRE((detail.w2_to_subsets.array() >= 0.0).all());
}

// ---------------------------------------------------------------------------
// simplex

TEST_CASE("simplex solves a small textbook program") {
  // min -x - y  s.t.  x + 2y + s1 = 4,  3x + y + s2 = 6
  LpProblem p;
  p.m = 2;
  p.b = Eigen::Vector2d(4.0, 6.0);
  p.c = Eigen::VectorXd(4);
  p.c << -1.0, -1.0, 0.0, 0.0;
  p.cols = {{{0, 1.0}, {1, 3.0}}, {{0, 2.0}, {1, 1.0}}, {{0, 1.0}}, {{1, 1.0}}};
  const auto sol = solve_lp(p);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(sol.objective == Approx(-2.8));
  REQUIRE(sol.x[0] == Approx(1.6));
  REQUIRE(sol.x[1] == Approx(1.2));
}

TEST_CASE("simplex detects infeasibility and unboundedness") {
  LpProblem inf;
  inf.m = 1;
  inf.b = Eigen::VectorXd::Constant(1, -1.0);
  inf.c = Eigen::VectorXd::Ones(2);
  inf.cols = {{{0, 1.0}}, {{0, 1.0}}};
  REQUIRE(solve_lp(inf).status == LpStatus::Infeasible);

  LpProblem unb;
  unb.m = 1;
  unb.b = Eigen::VectorXd::Zero(1);
  unb.c = Eigen::VectorXd(2);
  unb.c << -1.0, 0.0;
  unb.cols = {{{0, 1.0}}, {{0, -1.0}}};
  REQUIRE(solve_lp(unb).status == LpStatus::Unbounded);
}

// ---------------------------------------------------------------------------
// LP barycenter oracle

TEST_CASE("single-measure LP barycenter returns the input weights") {
  Eigen::VectorXd support(5);
  support << 0.0, 0.25, 0.5, 0.75, 1.0;
  Eigen::MatrixXd w(5, 1);
  w << 0.1, 0.0, 0.4, 0.3, 0.2;
  const auto lp = barycenter_lp_discrete(w, support);
  REQUIRE(lp.weights.isApprox(w.col(0), 1e-9));
  REQUIRE(lp.objective == Approx(0.0).margin(1e-12));
}

TEST_CASE("mirror-symmetric measures give a mirror-symmetric barycenter") {
  const int G = 21;
  Eigen::VectorXd support(G);
  for (int g = 0; g < G; ++g) support[g] = g * 0.05;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(G, 2);
  w(2, 0) = 0.3;
  w(6, 0) = 0.45;
  w(10, 0) = 0.25;
  for (int g = 0; g < G; ++g) w(G - 1 - g, 1) = w(g, 0);
  const auto lp = barycenter_lp_discrete(w, support);
  for (int g = 0; g < G; ++g)
    REQUIRE(lp.weights[g] == Approx(lp.weights[G - 1 - g]).margin(1e-8));
  REQUIRE(lp.weights.sum() == Approx(1.0).margin(1e-9));
}

TEST_CASE("lp and quantile barycenters agree on snapped instances") {
  Rng rng(109);
  const int G = 40;
  for (int rep = 0; rep < 10; ++rep) {
    const int K = 2 + static_cast<int>(rng.uniform_int(2));
    const int S = 30 + static_cast<int>(rng.uniform_int(21));
    std::vector<EmpiricalMeasure1D> raw;
    for (int j = 0; j < K; ++j)
      raw.push_back(gaussian_measure(rng, 2.0 * j - K + 1.0, 1.0, S));
    const auto snapped = snap_measures_to_grid(raw, G);

    std::vector<EmpiricalMeasure1D> ms;
    for (int j = 0; j < K; ++j) {
      EmpiricalMeasure1D m;
      std::vector<double> atoms, weights;
      for (int g = 0; g < G; ++g) {
        if (snapped.weights(g, j) > 0.0) {
          atoms.push_back(snapped.support[g]);
          weights.push_back(snapped.weights(g, j));
        }
      }
      m.atoms = Eigen::Map<Eigen::VectorXd>(atoms.data(), static_cast<long>(atoms.size()));
      m.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<long>(weights.size()));
      m.weights /= m.weights.sum();
      ms.push_back(std::move(m));
    }

    const auto bq = barycenter_quantile(ms, S);
    const double quant_obj = barycenter_objective(bq, ms);
    const auto lp = barycenter_lp_discrete(snapped.weights, snapped.support);

    // the LP objective must match an independent recomputation from its weights
    EmpiricalMeasure1D blp;
    std::vector<double> atoms, weights;
    for (int g = 0; g < G; ++g)
      if (lp.weights[g] > 1e-12) {
        atoms.push_back(snapped.support[g]);
        weights.push_back(lp.weights[g]);
      }
    blp.atoms = Eigen::Map<Eigen::VectorXd>(atoms.data(), static_cast<long>(atoms.size()));
    blp.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<long>(weights.size()));
    blp.weights /= blp.weights.sum();
    REQUIRE(barycenter_objective(blp, ms) == Approx(lp.objective).margin(1e-6));

    REQUIRE(lp.objective == Approx(quant_obj).epsilon(0.01));

    // the two barycenters coincide up to the grid resolution
    const double grid_step = snapped.support[1] - snapped.support[0];
    REQUIRE(w2_empirical_1d(bq, blp) <= 1.5 * grid_step);
  }
}

// ---------------------------------------------------------------------------
// metrics

TEST_CASE("kde recovers the standard normal density at the mode") {
  Rng rng(110);
  Eigen::VectorXd samples(100000);
  for (int i = 0; i < samples.size(); ++i) samples[i] = rng.normal();
  const auto kde = kde_gaussian(samples, 512);
  int k0 = 0;
  for (int k = 1; k < kde.grid.size(); ++k)
    if (std::fabs(kde.grid[k]) < std::fabs(kde.grid[k0])) k0 = k;
  REQUIRE(kde.density[k0] == Approx(0.3989).epsilon(0.05));
  // trapezoid integral close to one
  double integral = 0.0;
  for (int k = 1; k < kde.grid.size(); ++k)
    integral += 0.5 * (kde.density[k] + kde.density[k - 1]) * (kde.grid[k] - kde.grid[k - 1]);
  REQUIRE(integral == Approx(1.0).margin(1e-2));
}

TEST_CASE("kde rejects degenerate samples") {
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(100, 2.5);
  REQUIRE_THROWS_AS(kde_gaussian(constant, 64), std::invalid_argument);
  REQUIRE_THROWS_AS(kde_gaussian(Eigen::VectorXd::Zero(5), 64), std::invalid_argument);
}

TEST_CASE("tv accuracy is exactly one for identical draws") {
  Rng rng(111);
  Eigen::VectorXd draws(500);
  for (int i = 0; i < 500; ++i) draws[i] = rng.normal();
  REQUIRE(tv_accuracy(draws, draws) == 1.0);
}

TEST_CASE("tv accuracy vanishes for disjoint supports") {
  Rng rng(112);
  Eigen::VectorXd a(1000), b(1000);
  for (int i = 0; i < 1000; ++i) {
    a[i] = 0.1 * rng.normal();
    b[i] = 100.0 + 0.1 * rng.normal();
  }
  REQUIRE(tv_accuracy(a, b) <= 0.01);
}

TEST_CASE("tv accuracy is symmetric and affine invariant") {
  Rng rng(113);
  Eigen::VectorXd a(2000), b(2000);
  for (int i = 0; i < 2000; ++i) {
    a[i] = rng.normal();
    b[i] = 0.4 + 1.2 * rng.normal();
  }
  const double ab = tv_accuracy(a, b);
  REQUIRE(ab == Approx(tv_accuracy(b, a)).margin(1e-12));
  const Eigen::VectorXd a2 = 2.5 * a.array() - 7.0;
  const Eigen::VectorXd b2 = 2.5 * b.array() - 7.0;
  REQUIRE(tv_accuracy(a2, b2) == Approx(ab).margin(1e-3));
  REQUIRE(ab >= 0.0);
  REQUIRE(ab <= 1.0);
}

TEST_CASE("tv accuracy decreases with growing location shifts") {
  Rng rng(114);
  Eigen::VectorXd base(2000);
  for (int i = 0; i < 2000; ++i) base[i] = rng.normal();
  double prev = 1.1;
  for (const double shift : {0.0, 0.5, 1.0, 2.0}) {
    const Eigen::VectorXd shifted = base.array() + shift;
    const double acc = tv_accuracy(base, shifted);
    REQUIRE(acc < prev);
    prev = acc;
  }
}

TEST_CASE("summaries of simple columns") {
  const Eigen::VectorXd constant = Eigen::VectorXd::Constant(10, 4.2);
  const auto sc = summarize(constant);
  REQUIRE(sc.mean == Approx(4.2));
  REQUIRE(sc.sd == Approx(0.0));
  REQUIRE(sc.q025 == Approx(4.2));
  REQUIRE(sc.q975 == Approx(4.2));

  Eigen::VectorXd five(5);
  five << 1, 2, 3, 4, 5;
  const auto sf = summarize(five);
  REQUIRE(sf.mean == Approx(3.0));
  REQUIRE(sf.median == Approx(3.0));

  Rng rng(115);
  Eigen::VectorXd normal(100000);
  for (int i = 0; i < normal.size(); ++i) normal[i] = rng.normal();
  REQUIRE(summarize(normal).q975 == Approx(1.96).margin(0.03));
}

TEST_CASE("batch-means ess is near the draw count for iid chains") {
  Rng rng(116);
  Eigen::VectorXd chain(10000);
  for (int i = 0; i < chain.size(); ++i) chain[i] = rng.normal();
  const auto r = ess_fixed_width(chain, 0.05);
  REQUIRE(r.ess == Approx(10000.0).epsilon(0.20));
  REQUIRE(r.converged);
}

TEST_CASE("batch-means ess tracks ar1 autocorrelation") {
  Rng rng(117);
  const double phi = 0.9;
  Eigen::VectorXd chain(100000);
  double x = 0.0;
  for (int i = 0; i < chain.size(); ++i) {
    x = phi * x + rng.normal();
    chain[i] = x;
  }
  const auto r = ess_fixed_width(chain, 1.0);
  const double expect = (1.0 - phi) / (1.0 + phi);
  REQUIRE(r.ess / chain.size() == Approx(expect).epsilon(0.30));
}

TEST_CASE("constant chains are converged with zero half-width") {
  const auto r = ess_fixed_width(Eigen::VectorXd::Constant(500, 3.3), 0.01);
  REQUIRE(r.converged);
  REQUIRE(r.half_width == 0.0);
}
