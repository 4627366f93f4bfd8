#ifndef GWPP_CONFIG_HPP
#define GWPP_CONFIG_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwpp/design.hpp"
#include "gwpp/nbmodel.hpp"
#include "gwpp/synthpop.hpp"

namespace gwpp {

enum class PartitionKind { Random, Stratified };

// Full experiment description, read from a flat key = value file with
// [section] headers. Unknown sections or keys are errors so that typos
// cannot silently change a run.
struct ExperimentConfig {
  PopulationConfig population;
  double f = 0.5;
  int K = 1;
  WeightMode weight_mode = WeightMode::SubsetSum;
  PartitionKind partition = PartitionKind::Random;
  ChainConfig chain;
  int replications = 1;
  int workers = 1;
  double missing_rate = 0.0;
  MissingRule missing_rule;
  std::uint64_t base_seed = 0;
  std::string output_dir = "out";

  void validate() const {
    population.validate();
    chain.validate();
    if (f <= 0.0 || f > 1.0) throw std::invalid_argument("config: f must lie in (0,1]");
    if (K < 1) throw std::invalid_argument("config: K must be >= 1");
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (missing_rate < 0.0 || missing_rate >= 1.0)
      throw std::invalid_argument("config: missing_rate must lie in [0,1)");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
  return out;
}

}  // namespace detail

inline Eigen::MatrixXd covariance_from_var_cov(const std::vector<double>& vars, double cov) {
  const int Q = static_cast<int>(vars.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(Q, Q, cov);
  for (int q = 0; q < Q; ++q) m(q, q) = vars[q];
  return m;
}

inline ExperimentConfig parse_experiment_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg;
  std::vector<double> tau_list{1.0};
  std::vector<double> var_list{1.0};
  double cov = 0.0;

  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(source + ": malformed section at line " +
                                    std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      if (section != "population" && section != "design" && section != "chain" &&
          section != "experiment")
        throw std::invalid_argument(source + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(source + ": expected key = value at line " +
                                  std::to_string(lineno));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    if (full == "population.N") cfg.population.N = std::stoi(val);
    else if (full == "population.T") cfg.population.T = std::stoi(val);
    else if (full == "population.Q") cfg.population.Q = std::stoi(val);
    else if (full == "population.L") cfg.population.L = std::stoi(val);
    else if (full == "population.tau") tau_list = detail::parse_list(val);
    else if (full == "population.intercept_offset") cfg.population.intercept_offset = std::stod(val);
    else if (full == "population.car_r") cfg.population.r = std::stod(val);
    else if (full == "population.theta_var") var_list = detail::parse_list(val);
    else if (full == "population.theta_cov") cov = std::stod(val);
    else if (full == "design.f") cfg.f = std::stod(val);
    else if (full == "design.K") cfg.K = std::stoi(val);
    else if (full == "design.weight_mode") {
      if (val == "subset-sum") cfg.weight_mode = WeightMode::SubsetSum;
      else if (val == "full-sum") cfg.weight_mode = WeightMode::FullSum;
      else throw std::invalid_argument(source + ": unknown weight_mode '" + val + "'");
    } else if (full == "design.partition") {
      if (val == "random") cfg.partition = PartitionKind::Random;
      else if (val == "stratified") cfg.partition = PartitionKind::Stratified;
      else throw std::invalid_argument(source + ": unknown partition '" + val + "'");
    } else if (full == "chain.iterations") cfg.chain.iterations = std::stoi(val);
    else if (full == "chain.burn_in") cfg.chain.burn_in = std::stoi(val);
    else if (full == "chain.thin") cfg.chain.thin = std::stoi(val);
    else if (full == "chain.nu") cfg.chain.nu = std::stod(val);
    else if (full == "chain.ess_repeats") cfg.chain.ess_repeats = std::stoi(val);
    else if (full == "experiment.replications") cfg.replications = std::stoi(val);
    else if (full == "experiment.workers") cfg.workers = std::stoi(val);
    else if (full == "experiment.missing_rate") cfg.missing_rate = std::stod(val);
    else if (full == "experiment.missing_rule") {
      if (val == "mcar") cfg.missing_rule.kind = MissingKind::Mcar;
      else if (val == "response-q") cfg.missing_rule.kind = MissingKind::ResponseQOnly;
      else throw std::invalid_argument(source + ": unknown missing_rule '" + val + "'");
    } else if (full == "experiment.missing_q") cfg.missing_rule.q = std::stoi(val) - 1;
    else if (full == "experiment.base_seed") cfg.base_seed = std::stoull(val);
    else if (full == "experiment.output_dir") cfg.output_dir = val;
    else throw std::invalid_argument(source + ": unknown key '" + full + "'");
  }

  cfg.population.tau = Eigen::Map<Eigen::VectorXd>(tau_list.data(),
                                                   static_cast<long>(tau_list.size()));
  if (static_cast<int>(var_list.size()) != cfg.population.Q)
    var_list.assign(cfg.population.Q, var_list.empty() ? 1.0 : var_list[0]);
  cfg.population.theta_row_cov = covariance_from_var_cov(var_list, cov);
  cfg.population.seed = cfg.base_seed;
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  return parse_experiment_config(f, path);
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[population]\nN = " << cfg.population.N << "\nT = " << cfg.population.T
     << "\nQ = " << cfg.population.Q << "\nL = " << cfg.population.L << "\ntau = ";
  for (int q = 0; q < cfg.population.tau.size(); ++q)
    os << (q ? ", " : "") << cfg.population.tau[q];
  os << "\nintercept_offset = " << cfg.population.intercept_offset
     << "\ncar_r = " << cfg.population.r << "\ntheta_var = ";
  for (int q = 0; q < cfg.population.Q; ++q)
    os << (q ? ", " : "") << cfg.population.theta_row_cov(q, q);
  os << "\ntheta_cov = "
     << (cfg.population.Q > 1 ? cfg.population.theta_row_cov(0, 1) : 0.0) << "\n\n[design]\nf = "
     << cfg.f << "\nK = " << cfg.K << "\nweight_mode = "
     << (cfg.weight_mode == WeightMode::SubsetSum ? "subset-sum" : "full-sum")
     << "\npartition = " << (cfg.partition == PartitionKind::Random ? "random" : "stratified")
     << "\n\n[chain]\niterations = " << cfg.chain.iterations << "\nburn_in = "
     << cfg.chain.burn_in << "\nthin = " << cfg.chain.thin << "\nnu = " << cfg.chain.nu
     << "\ness_repeats = " << cfg.chain.ess_repeats
     << "\n\n[experiment]\nreplications = " << cfg.replications << "\nworkers = " << cfg.workers
     << "\nmissing_rate = " << cfg.missing_rate << "\nmissing_rule = "
     << (cfg.missing_rule.kind == MissingKind::Mcar ? "mcar" : "response-q")
     << "\nmissing_q = " << (cfg.missing_rule.q + 1) << "\nbase_seed = " << cfg.base_seed
     << "\noutput_dir = " << cfg.output_dir << "\n";
  return os.str();
}

}  // namespace gwpp

#endif  // GWPP_CONFIG_HPP
