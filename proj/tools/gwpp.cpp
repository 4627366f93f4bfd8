// Command-line front end: config-driven simulation, sampling, partitioning,
// chain fitting, barycenter combination, accuracy scoring, and imputation,
// all reading and writing the columnar text formats.

#include <CLI11.hpp>
#include <iostream>

#include "gwpp/barycenter.hpp"
#include "gwpp/config.hpp"
#include "gwpp/harness.hpp"
#include "gwpp/io.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
};

gwpp::ExperimentConfig load_cfg(const CommonArgs& args) {
  if (args.config_path.empty())
    throw std::invalid_argument("this subcommand requires --config <path>");
  gwpp::ExperimentConfig cfg = gwpp::load_experiment_config(args.config_path);
  if (args.seed_set) {
    cfg.base_seed = args.seed;
    cfg.population.seed = args.seed;
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_config = true) {
  if (with_config) cmd->add_option("--config", args.config_path, "experiment config file");
  cmd->add_option("--out", args.out, "output directory or file");
  cmd->add_option("--seed", args.seed, "base seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gwpp: sampling-weighted pseudo posteriors combined through W2 barycenters"};
  app.require_subcommand(1);

  CommonArgs sim_args, sample_args, part_args, fit_args, comb_args, acc_args, imp_args, exp_args;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic finite population");
  add_common(sim, sim_args);

  auto* smp = app.add_subcommand("sample", "draw an informative PPS sample from a population");
  std::string smp_pop;
  add_common(smp, sample_args);
  smp->add_option("--population", smp_pop, "population csv")->required();

  auto* prt = app.add_subcommand("partition", "partition a sample into K weighted subsets");
  std::string prt_pop, prt_sample;
  add_common(prt, part_args);
  prt->add_option("--population", prt_pop, "population csv")->required();
  prt->add_option("--sample", prt_sample, "sample csv")->required();

  auto* fit = app.add_subcommand("fit", "run one pseudo posterior chain");
  std::string fit_pop, fit_sample, fit_assign, fit_missing;
  int fit_subset = 0;
  int fit_iterations = 3000, fit_burn = 2000, fit_thin = 2;
  add_common(fit, fit_args);
  fit->add_option("--population", fit_pop, "population csv")->required();
  fit->add_option("--sample", fit_sample, "sample csv")->required();
  fit->add_option("--assignment", fit_assign, "assignment csv (fit one subset)");
  fit->add_option("--subset", fit_subset, "1-based subset index to fit");
  fit->add_option("--missing", fit_missing, "holdout csv");
  fit->add_option("--iterations", fit_iterations, "chain iterations");
  fit->add_option("--burn-in", fit_burn, "burn-in iterations");
  fit->add_option("--thin", fit_thin, "thinning stride");

  auto* comb = app.add_subcommand("combine", "W2 barycenter of subset draw files");
  std::vector<std::string> comb_files;
  add_common(comb, comb_args, false);
  comb->add_option("files", comb_files, "subset draw files")->required()->expected(-1);

  auto* acc = app.add_subcommand("accuracy", "per-parameter TV accuracy of two draw files");
  std::vector<std::string> acc_files;
  add_common(acc, acc_args, false);
  acc->add_option("files", acc_files, "two draw files")->required()->expected(2);

  auto* imp = app.add_subcommand("impute", "posterior predictive imputation of held-out cells");
  std::string imp_pop, imp_sample, imp_missing, imp_draws;
  add_common(imp, imp_args, false);
  imp->add_option("--population", imp_pop, "population csv")->required();
  imp->add_option("--sample", imp_sample, "sample csv")->required();
  imp->add_option("--missing", imp_missing, "holdout csv")->required();
  imp->add_option("--draws", imp_draws, "draws file")->required();

  auto* exp = app.add_subcommand("experiment", "full pipeline: simulate, fit, combine, score");
  int exp_workers = 0;
  add_common(exp, exp_args);
  exp->add_option("--workers", exp_workers, "max concurrent chains");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    namespace fs = std::filesystem;
    if (sim->parsed()) {
      auto cfg = load_cfg(sim_args);
      fs::create_directories(sim_args.out);
      gwpp::Rng rng(gwpp::Rng::derive(cfg.base_seed, "population", 0));
      const auto pop = gwpp::generate_population(cfg.population, rng);
      gwpp::write_population(sim_args.out + "/population.csv", pop);
      gwpp::write_truth(sim_args.out + "/truth.txt", pop);
      std::cout << "wrote " << sim_args.out << "/population.csv (" << pop.N << " units)\n";
    } else if (smp->parsed()) {
      auto cfg = load_cfg(sample_args);
      fs::create_directories(sample_args.out);
      const auto pop = gwpp::read_population(smp_pop);
      gwpp::Rng rng(gwpp::Rng::derive(cfg.base_seed, "design", 0));
      auto s = gwpp::build_sample(pop, cfg.f, rng);
      if (cfg.missing_rate > 0.0) {
        gwpp::Rng rng_m(gwpp::Rng::derive(cfg.base_seed, "missing", 0));
        s.missing = gwpp::hold_out_missing(s.n, s.T, s.Q, cfg.missing_rate, cfg.missing_rule,
                                           rng_m);
        gwpp::write_missing(sample_args.out + "/missing.csv", s);
      }
      gwpp::write_sample(sample_args.out + "/sample.csv", s);
      const auto diag = gwpp::design_diagnostics(s, pop.N);
      std::cout << "wrote " << sample_args.out << "/sample.csv (n=" << s.n
                << ", gamma=" << diag.gamma << ", f=" << diag.sampling_fraction << ")\n";
    } else if (prt->parsed()) {
      auto cfg = load_cfg(part_args);
      fs::create_directories(part_args.out);
      const auto pop = gwpp::read_population(prt_pop);
      const auto s = gwpp::read_sample(prt_sample, pop);
      gwpp::Rng rng(gwpp::Rng::derive(cfg.base_seed, "partition", 0));
      auto a = cfg.partition == gwpp::PartitionKind::Random
                   ? gwpp::partition_random(s, cfg.K, rng)
                   : gwpp::partition_stratified(s, cfg.K, rng);
      gwpp::normalize_weights_subset(s, a, cfg.weight_mode);
      gwpp::write_assignment(part_args.out + "/assignment.csv", s, a);
      std::cout << "wrote " << part_args.out << "/assignment.csv (K=" << cfg.K << ")\n";
    } else if (fit->parsed()) {
      const auto pop = gwpp::read_population(fit_pop);
      auto s = gwpp::read_sample(fit_sample, pop);
      if (!fit_missing.empty()) gwpp::read_missing(fit_missing, s);
      gwpp::CaseData data;
      if (!fit_assign.empty()) {
        const auto a = gwpp::read_assignment(fit_assign, s);
        if (fit_subset < 1 || fit_subset > a.K)
          throw std::invalid_argument("fit: --subset must be in 1..K");
        data = gwpp::subset_cases(s, a, fit_subset - 1);
      } else {
        data = gwpp::full_sample_cases(s);
      }
      gwpp::ChainConfig cc;
      cc.iterations = fit_iterations;
      cc.burn_in = fit_burn;
      cc.thin = fit_thin;
      cc.seed = fit_args.seed_set ? fit_args.seed : 0;
      if (!fit_args.config_path.empty()) {
        const auto cfg = gwpp::load_experiment_config(fit_args.config_path);
        cc = cfg.chain;
        cc.seed = fit_args.seed_set ? fit_args.seed : cfg.base_seed;
      }
      const auto draws = gwpp::run_chain(data, cc);
      const std::string out =
          fit_args.out == "." ? std::string("draws.txt") : fit_args.out;
      gwpp::write_draws(out, draws);
      std::cout << "wrote " << out << " (" << draws.draws.rows() << " draws, "
                << gwpp::fmt_double(draws.meta.wall_time_sec) << "s)\n";
    } else if (comb->parsed()) {
      std::vector<gwpp::ChainDraws> chains;
      for (const auto& f : comb_files) chains.push_back(gwpp::read_draws(f));
      const auto combined = gwpp::combine_marginals(chains);
      const std::string out =
          comb_args.out == "." ? std::string("combined.txt") : comb_args.out;
      gwpp::write_draws(out, combined);
      std::cout << "wrote " << out << " (K=" << chains.size() << ")\n";
    } else if (acc->parsed()) {
      const auto a = gwpp::read_draws(acc_files[0]);
      const auto b = gwpp::read_draws(acc_files[1]);
      if (a.names != b.names)
        throw std::invalid_argument("accuracy: schema mismatch between draw files");
      gwpp::AccuracyReport r;
      r.names = a.names;
      r.accuracy.resize(static_cast<int>(a.names.size()));
      for (int p = 0; p < static_cast<int>(a.names.size()); ++p)
        r.accuracy[p] = gwpp::tv_accuracy(a.draws.col(p), b.draws.col(p));
      r.mean_accuracy = r.accuracy.mean();
      std::cout << "parameter,accuracy\n";
      for (std::size_t p = 0; p < r.names.size(); ++p)
        std::cout << r.names[p] << ',' << gwpp::fmt_double(r.accuracy[static_cast<int>(p)])
                  << '\n';
      if (acc_args.out != ".") gwpp::write_accuracy(acc_args.out, r);
    } else if (imp->parsed()) {
      const auto pop = gwpp::read_population(imp_pop);
      auto s = gwpp::read_sample(imp_sample, pop);
      gwpp::read_missing(imp_missing, s);
      const auto draws = gwpp::read_draws(imp_draws);
      const auto data = gwpp::full_sample_cases(s);
      gwpp::Rng rng(imp_args.seed);
      const auto cells = gwpp::posterior_predictive_impute(draws, data, rng);
      const std::string out =
          imp_args.out == "." ? std::string("imputed.csv") : imp_args.out;
      gwpp::write_imputed(out, data, s, cells);
      std::cout << "wrote " << out << " (" << cells.size() << " cells)\n";
    } else if (exp->parsed()) {
      auto cfg = load_cfg(exp_args);
      if (exp_workers > 0) cfg.workers = exp_workers;
      if (exp_args.out != ".") cfg.output_dir = exp_args.out;
      const auto report = gwpp::run_pipeline(cfg);
      std::cout << "experiment finished: " << cfg.replications - report.failures << "/"
                << cfg.replications << " replications succeeded";
      if (report.mean_accuracy.names.size())
        std::cout << ", mean accuracy " << gwpp::fmt_double(report.mean_accuracy.mean_accuracy);
      std::cout << "\nreport: " << cfg.output_dir << "/report.txt\n";
      if (report.failures == cfg.replications) return 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
