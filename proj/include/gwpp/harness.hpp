#ifndef GWPP_HARNESS_HPP
#define GWPP_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <mutex>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gwpp/barycenter.hpp"
#include "gwpp/config.hpp"
#include "gwpp/io.hpp"
#include "gwpp/metrics.hpp"
#include "gwpp/nbmodel.hpp"

namespace gwpp {

// Bounded worker pool. The effective width is capped at the hardware
// concurrency so concurrently running chains do not time-slice against each
// other, which would corrupt per-chain wall-clock measurements.
class ThreadPool {
 public:
  explicit ThreadPool(int workers) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(hw)));
    for (int i = 0; i < n; ++i) {
      threads_.emplace_back([this] { run(); });
    }
  }

  ~ThreadPool() {
    {
      std::unique_lock<std::mutex> lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void submit(std::function<void()> task) {
    {
      std::unique_lock<std::mutex> lk(mu_);
      tasks_.push(std::move(task));
      ++outstanding_;
    }
    cv_.notify_one();
  }

  void wait_idle() {
    std::unique_lock<std::mutex> lk(mu_);
    idle_cv_.wait(lk, [this] { return outstanding_ == 0; });
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [this] { return stop_ || !tasks_.empty(); });
        if (stop_ && tasks_.empty()) return;
        task = std::move(tasks_.front());
        tasks_.pop();
      }
      task();
      {
        std::unique_lock<std::mutex> lk(mu_);
        --outstanding_;
        if (outstanding_ == 0) idle_cv_.notify_all();
      }
    }
  }

  std::vector<std::thread> threads_;
  std::queue<std::function<void()>> tasks_;
  std::mutex mu_;
  std::condition_variable cv_, idle_cv_;
  bool stop_ = false;
  int outstanding_ = 0;
};

struct ReplicationOutcome {
  bool failed = false;
  std::string error;
  AccuracyReport accuracy;              // GWPP vs full-sample fit, per parameter
  std::vector<double> subset_sd_ratio;  // per subset: median over parameters
  double imputation_tv = -1.0;          // -1 when no holdout was requested
  double full_seconds = 0.0;
  double subset_max_seconds = 0.0;
  double combine_seconds = 0.0;
  double gwpp_total_seconds = 0.0;  // subset_max + combine, i.e. fully parallel
  std::size_t full_fit_bytes = 0;
  std::size_t subset_fit_bytes = 0;
};

struct ExperimentReport {
  std::vector<ReplicationOutcome> replications;
  AccuracyReport mean_accuracy;    // over successful replications
  Eigen::MatrixXd theta_accuracy;  // Q x T mean accuracy for the intercepts
  int failures = 0;
};

namespace detail {

inline std::size_t estimate_fit_bytes(const CaseData& data, const ChainConfig& cfg, int P) {
  const std::size_t per_case = 8u * data.Q + data.Q + 8 + 8 + 12;
  return static_cast<std::size_t>(data.n_cases()) * per_case +
         static_cast<std::size_t>(cfg.retained()) * P * 8u;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double column_sd(const Eigen::VectorXd& col) {
  const double m = col.mean();
  return std::sqrt((col.array() - m).square().sum() / (col.size() - 1));
}

}  // namespace detail

// One full experiment: per replication, generate a population, draw the
// informative sample, hold out cells, partition, fit the K subset chains and
// the full-sample reference chain on the worker pool, combine, score, and
// impute. Every artifact lands under cfg.output_dir with deterministic
// names; a failed replication is recorded and does not stop the others.
inline ExperimentReport run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  {
    auto f = detail::open_out(cfg.output_dir + "/config.txt");
    f << serialize_config(cfg);
  }

  ExperimentReport report;
  std::vector<Eigen::VectorXd> accuracy_per_rep;
  std::vector<std::string> param_names;

  for (int rep = 0; rep < cfg.replications; ++rep) {
    ReplicationOutcome outcome;
    std::ostringstream repdir_s;
    repdir_s << cfg.output_dir << "/rep_" << std::setw(3) << std::setfill('0') << rep;
    const std::string repdir = repdir_s.str();
    fs::create_directories(repdir);

    try {
      Rng rng_pop(Rng::derive(cfg.base_seed, "population", rep));
      Rng rng_design(Rng::derive(cfg.base_seed, "design", rep));
      Rng rng_missing(Rng::derive(cfg.base_seed, "missing", rep));
      Rng rng_partition(Rng::derive(cfg.base_seed, "partition", rep));

      const FinitePopulation pop = generate_population(cfg.population, rng_pop);
      SurveySample sample = build_sample(pop, cfg.f, rng_design);
      if (cfg.missing_rate > 0.0)
        sample.missing = hold_out_missing(sample.n, sample.T, sample.Q, cfg.missing_rate,
                                          cfg.missing_rule, rng_missing);
      SubsetAssignment assignment = cfg.partition == PartitionKind::Random
                                        ? partition_random(sample, cfg.K, rng_partition)
                                        : partition_stratified(sample, cfg.K, rng_partition);
      normalize_weights_subset(sample, assignment, cfg.weight_mode);

      const CaseData full_data = full_sample_cases(sample);
      std::vector<CaseData> subset_data;
      for (int j = 0; j < cfg.K; ++j) subset_data.push_back(subset_cases(sample, assignment, j));

      // Fit the reference chain and the K subset chains concurrently.
      std::vector<ChainDraws> subset_draws(cfg.K);
      ChainDraws full_draws;
      std::vector<std::string> chain_errors(cfg.K + 1);
      {
        ThreadPool pool(cfg.workers);
        pool.submit([&] {
          try {
            ChainConfig c = cfg.chain;
            c.seed = Rng::derive(cfg.base_seed, "chain-full", rep);
            full_draws = run_chain(full_data, c);
          } catch (const std::exception& e) {
            chain_errors[cfg.K] = e.what();
          }
        });
        for (int j = 0; j < cfg.K; ++j) {
          pool.submit([&, j] {
            try {
              ChainConfig c = cfg.chain;
              c.seed = Rng::derive(cfg.base_seed, "chain-subset", rep, j);
              subset_draws[j] = run_chain(subset_data[j], c);
            } catch (const std::exception& e) {
              chain_errors[j] = e.what();
            }
          });
        }
        pool.wait_idle();
      }
      for (const auto& err : chain_errors)
        if (!err.empty()) throw std::runtime_error(err);

      const auto t_combine = std::chrono::steady_clock::now();
      ChainDraws combined = combine_marginals(subset_draws);
      outcome.combine_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_combine).count();
      combined.meta.seed = cfg.base_seed;

      // Accuracy of the combined draws against the full-sample fit.
      param_names = full_draws.names;
      outcome.accuracy.names = param_names;
      outcome.accuracy.accuracy.resize(static_cast<int>(param_names.size()));
      for (int p = 0; p < static_cast<int>(param_names.size()); ++p)
        outcome.accuracy.accuracy[p] = tv_accuracy(combined.draws.col(p), full_draws.draws.col(p));
      outcome.accuracy.mean_accuracy = outcome.accuracy.accuracy.mean();

      for (int j = 0; j < cfg.K; ++j) {
        std::vector<double> ratios;
        for (int p = 0; p < static_cast<int>(param_names.size()); ++p) {
          const double denom = detail::column_sd(full_draws.draws.col(p));
          if (denom > 0.0)
            ratios.push_back(detail::column_sd(subset_draws[j].draws.col(p)) / denom);
        }
        outcome.subset_sd_ratio.push_back(detail::median_of(std::move(ratios)));
      }

      outcome.full_seconds = full_draws.meta.wall_time_sec;
      for (const auto& d : subset_draws)
        outcome.subset_max_seconds = std::max(outcome.subset_max_seconds, d.meta.wall_time_sec);
      outcome.gwpp_total_seconds = outcome.subset_max_seconds + outcome.combine_seconds;
      outcome.full_fit_bytes = detail::estimate_fit_bytes(full_data, cfg.chain,
                                                          static_cast<int>(param_names.size()));
      for (const auto& d : subset_data)
        outcome.subset_fit_bytes =
            std::max(outcome.subset_fit_bytes,
                     detail::estimate_fit_bytes(d, cfg.chain,
                                                static_cast<int>(param_names.size())));

      // Posterior-predictive imputation of the held-out cells under both fits.
      std::vector<ImputedCell> imputed_full, imputed_gwpp;
      if (cfg.missing_rate > 0.0) {
        Rng rng_imp_full(Rng::derive(cfg.base_seed, "impute-full", rep));
        Rng rng_imp_gwpp(Rng::derive(cfg.base_seed, "impute-gwpp", rep));
        imputed_full = posterior_predictive_impute(full_draws, full_data, rng_imp_full, false);
        imputed_gwpp = posterior_predictive_impute(combined, full_data, rng_imp_gwpp, false);
        if (imputed_full.size() >= 10) {
          Eigen::VectorXd mf(imputed_full.size()), mg(imputed_gwpp.size());
          for (std::size_t i = 0; i < imputed_full.size(); ++i) mf[i] = imputed_full[i].post_mean;
          for (std::size_t i = 0; i < imputed_gwpp.size(); ++i) mg[i] = imputed_gwpp[i].post_mean;
          outcome.imputation_tv = tv_accuracy(mg, mf);
        }
      }

      // Artifacts, written only after all tasks completed.
      write_sample(repdir + "/sample.csv", sample);
      write_assignment(repdir + "/assignment.csv", sample, assignment);
      if (cfg.missing_rate > 0.0) write_missing(repdir + "/missing.csv", sample);
      write_draws(repdir + "/draws_full.txt", full_draws);
      for (int j = 0; j < cfg.K; ++j) {
        std::ostringstream name;
        name << repdir << "/draws_subset_" << std::setw(2) << std::setfill('0') << (j + 1)
             << ".txt";
        write_draws(name.str(), subset_draws[j]);
      }
      write_draws(repdir + "/draws_gwpp.txt", combined);
      write_accuracy(repdir + "/accuracy.csv", outcome.accuracy);
      write_timing(repdir + "/timing.csv", {{"full", outcome.full_seconds},
                                            {"subset_max", outcome.subset_max_seconds},
                                            {"combine", outcome.combine_seconds},
                                            {"gwpp_total", outcome.gwpp_total_seconds}});
      if (cfg.missing_rate > 0.0) {
        write_imputed(repdir + "/imputed_full.csv", full_data, sample, imputed_full);
        write_imputed(repdir + "/imputed_gwpp.csv", full_data, sample, imputed_gwpp);
      }
      accuracy_per_rep.push_back(outcome.accuracy.accuracy);
    } catch (const std::exception& e) {
      outcome.failed = true;
      outcome.error = e.what();
      ++report.failures;
      auto f = detail::open_out(repdir + "/FAILED.txt");
      f << e.what() << '\n';
    }
    report.replications.push_back(std::move(outcome));
  }

  // Aggregate successful replications.
  if (!accuracy_per_rep.empty()) {
    const int P = static_cast<int>(param_names.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(P);
    for (const auto& a : accuracy_per_rep) mean += a;
    mean /= static_cast<double>(accuracy_per_rep.size());
    report.mean_accuracy.names = param_names;
    report.mean_accuracy.accuracy = mean;
    report.mean_accuracy.mean_accuracy = mean.mean();
    double max_sd = 0.0;
    if (accuracy_per_rep.size() > 1) {
      for (int p = 0; p < P; ++p) {
        double ss = 0.0;
        for (const auto& a : accuracy_per_rep) ss += (a[p] - mean[p]) * (a[p] - mean[p]);
        max_sd = std::max(max_sd, std::sqrt(ss / (accuracy_per_rep.size() - 1)));
      }
    }
    report.mean_accuracy.mc_error = max_sd;

    const int Q = cfg.population.Q, T = cfg.population.T;
    report.theta_accuracy.resize(Q, T);
    for (int q = 0; q < Q; ++q)
      for (int t = 0; t < T; ++t) {
        const std::string name = theta_name(q, t);
        for (int p = 0; p < P; ++p)
          if (param_names[p] == name) report.theta_accuracy(q, t) = mean[p];
      }
    write_accuracy(cfg.output_dir + "/accuracy_mean.csv", report.mean_accuracy);
  }

  // Human-readable summary.
  {
    auto f = detail::open_out(cfg.output_dir + "/report.txt");
    f << "replications: " << cfg.replications << " (failed: " << report.failures << ")\n";
    f << "K = " << cfg.K << ", f = " << cfg.f << ", weight_mode = "
      << (cfg.weight_mode == WeightMode::SubsetSum ? "subset-sum" : "full-sum") << "\n\n";
    if (report.mean_accuracy.names.size()) {
      f << "mean TV accuracy (GWPP vs full-sample fit)\n";
      for (std::size_t p = 0; p < report.mean_accuracy.names.size(); ++p)
        f << "  " << report.mean_accuracy.names[p] << "  "
          << fmt_double(report.mean_accuracy.accuracy[static_cast<int>(p)]) << '\n';
      f << "  overall mean: " << fmt_double(report.mean_accuracy.mean_accuracy) << '\n';
      f << "  max MC error across parameters: " << fmt_double(report.mean_accuracy.mc_error)
        << "\n\n";
    }
    for (std::size_t r = 0; r < report.replications.size(); ++r) {
      const auto& o = report.replications[r];
      f << "rep " << r;
      if (o.failed) {
        f << " FAILED: " << o.error << '\n';
        continue;
      }
      f << " times(s): full=" << fmt_double(o.full_seconds)
        << " subset_max=" << fmt_double(o.subset_max_seconds)
        << " combine=" << fmt_double(o.combine_seconds)
        << " gwpp_total=" << fmt_double(o.gwpp_total_seconds)
        << "; est. working set: full=" << o.full_fit_bytes << "B subset=" << o.subset_fit_bytes
        << "B";
      if (o.imputation_tv >= 0.0) f << "; imputation TV=" << fmt_double(o.imputation_tv);
      f << '\n';
    }
  }
  return report;
}

inline std::vector<std::pair<std::string, double>> timing_report(const ReplicationOutcome& o) {
  return {{"full", o.full_seconds},
          {"subset_max", o.subset_max_seconds},
          {"combine", o.combine_seconds},
          {"gwpp_total", o.gwpp_total_seconds}};
}

}  // namespace gwpp

#endif  // GWPP_HARNESS_HPP
