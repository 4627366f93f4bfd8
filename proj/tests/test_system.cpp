#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gwpp/config.hpp"
#include "gwpp/harness.hpp"
#include "gwpp/io.hpp"

using Catch::Approx;
using namespace gwpp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("gwpp_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

PopulationConfig tiny_pop_config() {
  PopulationConfig cfg;
  cfg.N = 50;
  cfg.T = 3;
  cfg.Q = 2;
  cfg.L = 0;
  cfg.tau = Eigen::Vector2d(5.0, 10.0);
  cfg.intercept_offset = 2.0;
  cfg.r = 0.6;
  cfg.theta_row_cov.resize(2, 2);
  cfg.theta_row_cov << 0.5, 0.1, 0.1, 0.8;
  cfg.seed = 7;
  return cfg;
}

// File equality ignoring recorded wall-clock lines, which are the one
// measurement that cannot reproduce across runs.
bool same_content_modulo_walltime(const std::string& a, const std::string& b) {
  std::ifstream fa(a), fb(b);
  std::string la, lb;
  for (;;) {
    bool ga = static_cast<bool>(std::getline(fa, la));
    bool gb = static_cast<bool>(std::getline(fb, lb));
    while (ga && la.rfind("# wall_time_sec=", 0) == 0) ga = static_cast<bool>(std::getline(fa, la));
    while (gb && lb.rfind("# wall_time_sec=", 0) == 0) gb = static_cast<bool>(std::getline(fb, lb));
    if (!ga || !gb) return ga == gb;
    if (la != lb) return false;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// file formats

TEST_CASE("population files round trip") {
  TempDir dir("pop");
  Rng rng(7);
  const auto pop = generate_population(tiny_pop_config(), rng);
  write_population(dir / "population.csv", pop);
  const auto back = read_population(dir / "population.csv");
  REQUIRE(back.N == pop.N);
  REQUIRE(back.T == pop.T);
  REQUIRE(back.Q == pop.Q);
  REQUIRE(back.y == pop.y);
  REQUIRE(back.strata == pop.strata);
  REQUIRE(back.size_measure.isApprox(pop.size_measure));

  write_truth(dir / "truth.txt", pop);
  const auto truth = read_truth(dir / "truth.txt");
  REQUIRE(truth.at("theta[1][1]") == pop.theta_true(0, 0));
  REQUIRE(truth.at("theta[2][3]") == pop.theta_true(1, 2));
}

TEST_CASE("sample, assignment, and missing files round trip") {
  TempDir dir("sample");
  Rng rng(8);
  const auto pop = generate_population(tiny_pop_config(), rng);
  auto sample = build_sample(pop, 0.5, rng);
  Rng rng_m(3);
  sample.missing =
      hold_out_missing(sample.n, sample.T, sample.Q, 0.3, MissingRule{}, rng_m);
  auto assignment = partition_random(sample, 3, rng);
  normalize_weights_subset(sample, assignment, WeightMode::SubsetSum);

  write_sample(dir / "sample.csv", sample);
  write_missing(dir / "missing.csv", sample);
  write_assignment(dir / "assignment.csv", sample, assignment);

  auto back = read_sample(dir / "sample.csv", pop);
  REQUIRE(back.n == sample.n);
  REQUIRE(back.unit_ids == sample.unit_ids);
  REQUIRE(back.pi.isApprox(sample.pi, 0.0));
  REQUIRE(back.norm_w.isApprox(sample.norm_w, 0.0));
  REQUIRE(back.y == sample.y);

  read_missing(dir / "missing.csv", back);
  REQUIRE(back.missing == sample.missing);

  const auto a2 = read_assignment(dir / "assignment.csv", back);
  REQUIRE(a2.K == assignment.K);
  for (int j = 0; j < assignment.K; ++j) {
    REQUIRE(a2.membership[j] == assignment.membership[j]);
    for (std::size_t k = 0; k < assignment.subset_w[j].size(); ++k)
      REQUIRE(a2.subset_w[j][k] == assignment.subset_w[j][k]);
  }
}

TEST_CASE("draw files round trip with their metadata") {
  TempDir dir("draws");
  ChainDraws d;
  d.names = {"theta[1][1]", "theta[1][2]", "tau[1]"};
  d.draws.resize(3, 3);
  d.draws << 0.5, -1.25, 2.0, 1.0 / 3.0, 1e-17, 5.0, -2.5, 0.125, 7.0;
  d.meta.seed = 12345;
  d.meta.config_hash = "abcd";
  d.meta.iterations = 100;
  d.meta.burn_in = 10;
  d.meta.thin = 3;
  d.meta.wall_time_sec = 1.5;
  d.meta.stuck_events = 2;
  write_draws(dir / "d.txt", d);
  const auto back = read_draws(dir / "d.txt");
  REQUIRE(back.names == d.names);
  REQUIRE(back.draws == d.draws);
  REQUIRE(back.meta.seed == 12345);
  REQUIRE(back.meta.config_hash == "abcd");
  REQUIRE(back.meta.iterations == 100);
  REQUIRE(back.meta.stuck_events == 2);

  AccuracyReport r;
  r.names = {"theta[1][1]", "tau[1]"};
  r.accuracy = Eigen::Vector2d(0.96, 0.91);
  write_accuracy(dir / "acc.csv", r);
  const auto acc = read_accuracy(dir / "acc.csv");
  REQUIRE(acc.names == r.names);
  REQUIRE(acc.accuracy.isApprox(r.accuracy, 0.0));
}

// ---------------------------------------------------------------------------
// configuration

TEST_CASE("experiment configs parse from key = value text") {
  std::istringstream in(R"([population]
N = 100
T = 3
Q = 2
L = 0
tau = 5, 10
intercept_offset = 5
car_r = 0.9
theta_var = 0.5, 2
theta_cov = 0.6

[design]
f = 0.5
K = 4
weight_mode = full-sum
partition = stratified

[chain]
iterations = 200
burn_in = 100
thin = 2

[experiment]
replications = 2
workers = 3
missing_rate = 0.25
missing_rule = response-q
missing_q = 2
base_seed = 99
output_dir = /tmp/x
)");
  const auto cfg = parse_experiment_config(in, "test");
  cfg.validate();
  REQUIRE(cfg.population.N == 100);
  REQUIRE(cfg.population.tau[1] == 10.0);
  REQUIRE(cfg.population.theta_row_cov(0, 1) == 0.6);
  REQUIRE(cfg.weight_mode == WeightMode::FullSum);
  REQUIRE(cfg.partition == PartitionKind::Stratified);
  REQUIRE(cfg.chain.iterations == 200);
  REQUIRE(cfg.missing_rule.kind == MissingKind::ResponseQOnly);
  REQUIRE(cfg.missing_rule.q == 1);
  REQUIRE(cfg.base_seed == 99);

  // serialized form parses back to the same settings
  std::istringstream round(serialize_config(cfg));
  const auto cfg2 = parse_experiment_config(round, "round");
  REQUIRE(serialize_config(cfg2) == serialize_config(cfg));
}

TEST_CASE("unknown configuration keys are rejected") {
  std::istringstream bad1("[population]\nN = 10\nbanana = 3\n");
  REQUIRE_THROWS_AS(parse_experiment_config(bad1, "t"), std::invalid_argument);
  std::istringstream bad2("[fruit]\nN = 10\n");
  REQUIRE_THROWS_AS(parse_experiment_config(bad2, "t"), std::invalid_argument);
  std::istringstream bad3("[design]\nweight_mode = banana\n");
  REQUIRE_THROWS_AS(parse_experiment_config(bad3, "t"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

ExperimentConfig mini_experiment(const std::string& outdir, int K) {
  ExperimentConfig cfg;
  cfg.population.N = 400;
  cfg.population.T = 2;
  cfg.population.Q = 1;
  cfg.population.L = 0;
  cfg.population.tau = Eigen::VectorXd::Constant(1, 5.0);
  cfg.population.intercept_offset = 3.0;
  cfg.population.r = 0.5;
  cfg.population.theta_row_cov = 0.3 * Eigen::MatrixXd::Identity(1, 1);
  cfg.population.seed = 5;
  cfg.f = 0.5;
  cfg.K = K;
  cfg.weight_mode = WeightMode::SubsetSum;
  cfg.partition = PartitionKind::Random;
  cfg.chain.iterations = 500;
  cfg.chain.burn_in = 200;
  cfg.chain.thin = 2;
  cfg.replications = 1;
  cfg.workers = 2;
  cfg.base_seed = 424242;
  cfg.output_dir = outdir;
  return cfg;
}

}  // namespace

TEST_CASE("pipeline produces a full artifact set") {
  TempDir dir("pipe");
  const auto cfg = mini_experiment(dir / "run", 2);
  const auto report = run_pipeline(cfg);
  REQUIRE(report.failures == 0);
  REQUIRE(report.replications.size() == 1);
  const auto& rep = report.replications[0];
  REQUIRE((rep.accuracy.accuracy.array() >= 0.0).all());
  REQUIRE((rep.accuracy.accuracy.array() <= 1.0).all());
  REQUIRE(rep.subset_sd_ratio.size() == 2);
  REQUIRE(rep.full_seconds > 0.0);
  REQUIRE(rep.gwpp_total_seconds == Approx(rep.subset_max_seconds + rep.combine_seconds));
  for (const std::string f :
       {"config.txt", "report.txt", "accuracy_mean.csv", "rep_000/sample.csv",
        "rep_000/assignment.csv", "rep_000/draws_full.txt", "rep_000/draws_subset_01.txt",
        "rep_000/draws_subset_02.txt", "rep_000/draws_gwpp.txt", "rep_000/accuracy.csv",
        "rep_000/timing.csv"}) {
    INFO(f);
    REQUIRE(fs::exists(fs::path(dir / "run") / f));
  }
}

TEST_CASE("single-subset pipeline reproduces the full-sample fit") {
  TempDir dir("k1");
  auto cfg = mini_experiment(dir / "run", 1);
  cfg.chain.iterations = 1400;
  cfg.chain.burn_in = 400;
  cfg.chain.thin = 2;
  const auto report = run_pipeline(cfg);
  REQUIRE(report.failures == 0);

  // combined draws are the single subset's draws, sorted per column
  const auto subset = read_draws(dir / "run/rep_000/draws_subset_01.txt");
  const auto gwpp = read_draws(dir / "run/rep_000/draws_gwpp.txt");
  for (int p = 0; p < subset.draws.cols(); ++p) {
    Eigen::VectorXd sorted = subset.draws.col(p);
    std::sort(sorted.data(), sorted.data() + sorted.size());
    REQUIRE(gwpp.draws.col(p).isApprox(sorted, 1e-12));
  }
  // and they agree with the full fit up to chain noise
  REQUIRE(report.replications[0].accuracy.accuracy.minCoeff() >= 0.9);
}

TEST_CASE("pipeline outputs are reproducible and worker-count independent") {
  TempDir dir("det");
  auto a = mini_experiment(dir / "a", 2);
  auto b = mini_experiment(dir / "b", 2);
  auto c = mini_experiment(dir / "c", 2);
  c.workers = 1;
  run_pipeline(a);
  run_pipeline(b);
  run_pipeline(c);
  for (const std::string f :
       {"rep_000/sample.csv", "rep_000/assignment.csv", "rep_000/draws_full.txt",
        "rep_000/draws_subset_01.txt", "rep_000/draws_gwpp.txt", "rep_000/accuracy.csv"}) {
    INFO(f);
    REQUIRE(same_content_modulo_walltime(dir / ("a/" + f), dir / ("b/" + f)));
    REQUIRE(same_content_modulo_walltime(dir / ("a/" + f), dir / ("c/" + f)));
  }
}

TEST_CASE("imputation artifacts appear when a holdout is requested") {
  TempDir dir("imp");
  auto cfg = mini_experiment(dir / "run", 2);
  cfg.missing_rate = 0.25;
  cfg.missing_rule = MissingRule{MissingKind::Mcar, 0};
  const auto report = run_pipeline(cfg);
  REQUIRE(report.failures == 0);
  REQUIRE(report.replications[0].imputation_tv >= 0.0);
  REQUIRE(fs::exists(fs::path(dir / "run") / "rep_000/missing.csv"));
  REQUIRE(fs::exists(fs::path(dir / "run") / "rep_000/imputed_full.csv"));
  REQUIRE(fs::exists(fs::path(dir / "run") / "rep_000/imputed_gwpp.csv"));
}

// ---------------------------------------------------------------------------
// command line

namespace {

int run_cli(const std::string& args, const std::string& capture = "") {
  std::string cmd = std::string(GWPP_CLI_PATH) + " " + args;
  if (!capture.empty()) cmd += " > " + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli help and error codes") {
  TempDir dir("cli");
  REQUIRE(run_cli("--help", dir / "help.txt") == 0);
  REQUIRE(run_cli("--definitely-not-a-flag", dir / "err.txt") == 1);
  REQUIRE(run_cli("simulate", dir / "err2.txt") == 1);  // missing --config
}

TEST_CASE("cli pipeline: simulate, sample, partition, fit, combine, accuracy") {
  TempDir dir("cliflow");
  {
    std::ofstream f(dir / "exp.cfg");
    f << "[population]\nN = 120\nT = 2\nQ = 1\nL = 0\ntau = 5\nintercept_offset = 3\n"
      << "car_r = 0.5\ntheta_var = 0.3\ntheta_cov = 0\n"
      << "[design]\nf = 0.5\nK = 2\nweight_mode = subset-sum\npartition = random\n"
      << "[chain]\niterations = 200\nburn_in = 100\nthin = 1\n"
      << "[experiment]\nreplications = 1\nworkers = 2\nbase_seed = 31\noutput_dir = "
      << (dir / "expout") << "\n";
  }
  const std::string cfg = " --config " + (dir / "exp.cfg");
  REQUIRE(run_cli("simulate" + cfg + " --out " + (dir / "data"), dir / "log1.txt") == 0);
  REQUIRE(run_cli("sample" + cfg + " --population " + (dir / "data/population.csv") +
                      " --out " + (dir / "data"),
                  dir / "log2.txt") == 0);
  REQUIRE(run_cli("partition" + cfg + " --population " + (dir / "data/population.csv") +
                      " --sample " + (dir / "data/sample.csv") + " --out " + (dir / "data"),
                  dir / "log3.txt") == 0);
  REQUIRE(run_cli("fit --population " + (dir / "data/population.csv") + " --sample " +
                      (dir / "data/sample.csv") + " --iterations 200 --burn-in 100 --thin 1" +
                      " --seed 5 --out " + (dir / "data/full.draws"),
                  dir / "log4.txt") == 0);
  REQUIRE(run_cli("fit --population " + (dir / "data/population.csv") + " --sample " +
                      (dir / "data/sample.csv") + " --assignment " +
                      (dir / "data/assignment.csv") + " --subset 1" +
                      " --iterations 200 --burn-in 100 --thin 1 --seed 6 --out " +
                      (dir / "data/s1.draws"),
                  dir / "log5.txt") == 0);
  REQUIRE(run_cli("fit --population " + (dir / "data/population.csv") + " --sample " +
                      (dir / "data/sample.csv") + " --assignment " +
                      (dir / "data/assignment.csv") + " --subset 2" +
                      " --iterations 200 --burn-in 100 --thin 1 --seed 7 --out " +
                      (dir / "data/s2.draws"),
                  dir / "log6.txt") == 0);
  REQUIRE(run_cli("combine " + (dir / "data/s1.draws") + " " + (dir / "data/s2.draws") +
                      " --out " + (dir / "data/gwpp.draws"),
                  dir / "log7.txt") == 0);

  // identical files give accuracy exactly 1 for every parameter
  REQUIRE(run_cli("accuracy " + (dir / "data/full.draws") + " " + (dir / "data/full.draws"),
                  dir / "acc.txt") == 0);
  const std::string acc = slurp(dir / "acc.txt");
  REQUIRE(acc.find("theta[1][1],1") != std::string::npos);

  REQUIRE(run_cli("accuracy " + (dir / "data/full.draws") + " " + (dir / "data/gwpp.draws"),
                  dir / "acc2.txt") == 0);

  // mismatched schemas exit with a validation error
  {
    auto d = read_draws(dir / "data/s1.draws");
    d.names[0] = "theta[9][9]";
    write_draws(dir / "data/bad.draws", d);
  }
  REQUIRE(run_cli("combine " + (dir / "data/s1.draws") + " " + (dir / "data/bad.draws") +
                      " --out " + (dir / "data/x.draws"),
                  dir / "log8.txt") == 1);

  REQUIRE(run_cli("experiment" + cfg + " --workers 2", dir / "log9.txt") == 0);
  REQUIRE(fs::exists(fs::path(dir / "expout") / "report.txt"));
}
