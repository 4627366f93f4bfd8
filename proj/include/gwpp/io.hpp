#ifndef GWPP_IO_HPP
#define GWPP_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwpp/barycenter.hpp"
#include "gwpp/design.hpp"
#include "gwpp/metrics.hpp"
#include "gwpp/nbmodel.hpp"
#include "gwpp/synthpop.hpp"

namespace gwpp {

// All data files are columnar text with a header row; floating point values
// are written with 17 significant digits so round trips are exact.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

inline void expect_header(const std::string& got, const std::string& want,
                          const std::string& path) {
  if (got != want)
    throw std::invalid_argument("schema mismatch in " + path + ": expected header '" + want +
                                "', found '" + got + "'");
}

}  // namespace detail

// ---- population -----------------------------------------------------------

inline void write_population(const std::string& path, const FinitePopulation& pop) {
  auto f = detail::open_out(path);
  f << "unit,month,response,y,stratum\n";
  for (int i = 0; i < pop.N; ++i)
    for (int t = 0; t < pop.T; ++t)
      for (int q = 0; q < pop.Q; ++q)
        f << (i + 1) << ',' << (t + 1) << ',' << (q + 1) << ',' << pop.yval(i, t, q) << ','
          << (pop.strata[i] + 1) << '\n';
}

inline FinitePopulation read_population(const std::string& path) {
  auto f = detail::open_in(path);
  std::string line;
  std::getline(f, line);
  detail::expect_header(line, "unit,month,response,y,stratum", path);
  struct Cell {
    int i, t, q;
    long y;
    int s;
  };
  std::vector<Cell> cells;
  int N = 0, T = 0, Q = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_csv(line);
    if (parts.size() != 5) throw std::invalid_argument("bad population row: " + line);
    Cell c{std::stoi(parts[0]) - 1, std::stoi(parts[1]) - 1, std::stoi(parts[2]) - 1,
           std::stol(parts[3]), std::stoi(parts[4]) - 1};
    N = std::max(N, c.i + 1);
    T = std::max(T, c.t + 1);
    Q = std::max(Q, c.q + 1);
    cells.push_back(c);
  }
  FinitePopulation pop;
  pop.N = N;
  pop.T = T;
  pop.Q = Q;
  pop.y.assign(static_cast<std::size_t>(N) * T * Q, 0);
  pop.strata.assign(N, 0);
  int max_stratum = 0;
  for (const auto& c : cells) {
    pop.yref(c.i, c.t, c.q) = c.y;
    pop.strata[c.i] = c.s;
    max_stratum = std::max(max_stratum, c.s);
  }
  pop.L = max_stratum > 0 ? max_stratum + 1 : 0;
  pop.size_measure.resize(N);
  for (int i = 0; i < N; ++i) {
    long total = 0;
    for (int t = 0; t < T; ++t)
      for (int q = 0; q < Q; ++q) total += pop.yval(i, t, q);
    pop.size_measure[i] = static_cast<double>(total) + 1.0;
  }
  return pop;
}

inline void write_truth(const std::string& path, const FinitePopulation& pop) {
  auto f = detail::open_out(path);
  for (int q = 0; q < pop.Q; ++q)
    for (int t = 0; t < pop.T; ++t)
      f << theta_name(q, t) << " = " << fmt_double(pop.theta_true(q, t)) << '\n';
  for (int l = 0; l < static_cast<int>(pop.gamma_true.size()); ++l)
    for (int q = 0; q < pop.Q; ++q)
      for (int t = 0; t < pop.T; ++t)
        f << gamma_name(l, q, t) << " = " << fmt_double(pop.gamma_true[l](q, t)) << '\n';
}

inline std::map<std::string, double> read_truth(const std::string& path) {
  auto f = detail::open_in(path);
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw std::invalid_argument("bad truth row: " + line);
    out[line.substr(0, eq)] = std::stod(line.substr(eq + 3));
  }
  return out;
}

// ---- sample / assignment / missing ----------------------------------------

inline void write_sample(const std::string& path, const SurveySample& s) {
  auto f = detail::open_out(path);
  f << "unit,pi,raw_w,norm_w,stratum\n";
  for (int k = 0; k < s.n; ++k)
    f << (s.unit_ids[k] + 1) << ',' << fmt_double(s.pi[k]) << ',' << fmt_double(s.raw_w[k]) << ','
      << fmt_double(s.norm_w[k]) << ',' << (s.strata[k] + 1) << '\n';
}

// Sample responses live in the population file; rebuilding a sample joins
// the two on unit id.
inline SurveySample read_sample(const std::string& path, const FinitePopulation& pop) {
  auto f = detail::open_in(path);
  std::string line;
  std::getline(f, line);
  detail::expect_header(line, "unit,pi,raw_w,norm_w,stratum", path);
  SurveySample s;
  s.T = pop.T;
  s.Q = pop.Q;
  s.L = pop.L;
  s.population_size = pop.N;
  std::vector<double> pi, raw, norm;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_csv(line);
    if (parts.size() != 5) throw std::invalid_argument("bad sample row: " + line);
    const int unit = std::stoi(parts[0]) - 1;
    if (unit < 0 || unit >= pop.N)
      throw std::invalid_argument("sample unit out of population range: " + parts[0]);
    s.unit_ids.push_back(unit);
    pi.push_back(std::stod(parts[1]));
    raw.push_back(std::stod(parts[2]));
    norm.push_back(std::stod(parts[3]));
    s.strata.push_back(std::stoi(parts[4]) - 1);
  }
  s.n = static_cast<int>(s.unit_ids.size());
  s.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), s.n);
  s.raw_w = Eigen::Map<Eigen::VectorXd>(raw.data(), s.n);
  s.norm_w = Eigen::Map<Eigen::VectorXd>(norm.data(), s.n);
  s.y.resize(static_cast<std::size_t>(s.n) * s.T * s.Q);
  for (int k = 0; k < s.n; ++k)
    for (int t = 0; t < s.T; ++t)
      for (int q = 0; q < s.Q; ++q)
        s.y[(static_cast<std::size_t>(k) * s.T + t) * s.Q + q] = pop.yval(s.unit_ids[k], t, q);
  return s;
}

inline void write_assignment(const std::string& path, const SurveySample& s,
                             const SubsetAssignment& a) {
  auto f = detail::open_out(path);
  f << "unit,subset,subset_w\n";
  for (int j = 0; j < a.K; ++j) {
    for (std::size_t k = 0; k < a.membership[j].size(); ++k) {
      const int idx = a.membership[j][k];
      const double w = a.subset_w.empty() ? 0.0 : a.subset_w[j][k];
      f << (s.unit_ids[idx] + 1) << ',' << (j + 1) << ',' << fmt_double(w) << '\n';
    }
  }
}

inline SubsetAssignment read_assignment(const std::string& path, const SurveySample& s) {
  auto f = detail::open_in(path);
  std::string line;
  std::getline(f, line);
  detail::expect_header(line, "unit,subset,subset_w", path);
  std::map<int, int> unit_to_idx;
  for (int k = 0; k < s.n; ++k) unit_to_idx[s.unit_ids[k]] = k;
  SubsetAssignment a;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_csv(line);
    if (parts.size() != 3) throw std::invalid_argument("bad assignment row: " + line);
    const int unit = std::stoi(parts[0]) - 1;
    const int j = std::stoi(parts[1]) - 1;
    const auto it = unit_to_idx.find(unit);
    if (it == unit_to_idx.end())
      throw std::invalid_argument("assignment unit not in sample: " + parts[0]);
    if (j >= a.K) {
      a.K = j + 1;
      a.membership.resize(a.K);
      a.subset_w.resize(a.K);
    }
    a.membership[j].push_back(it->second);
    a.subset_w[j].push_back(std::stod(parts[2]));
  }
  return a;
}

inline void write_missing(const std::string& path, const SurveySample& s) {
  auto f = detail::open_out(path);
  f << "unit,month,response\n";
  if (s.missing.empty()) return;
  for (int k = 0; k < s.n; ++k)
    for (int t = 0; t < s.T; ++t)
      for (int q = 0; q < s.Q; ++q)
        if (s.is_missing(k, t, q))
          f << (s.unit_ids[k] + 1) << ',' << (t + 1) << ',' << (q + 1) << '\n';
}

inline void read_missing(const std::string& path, SurveySample& s) {
  auto f = detail::open_in(path);
  std::string line;
  std::getline(f, line);
  detail::expect_header(line, "unit,month,response", path);
  std::map<int, int> unit_to_idx;
  for (int k = 0; k < s.n; ++k) unit_to_idx[s.unit_ids[k]] = k;
  s.missing.assign(static_cast<std::size_t>(s.n) * s.T * s.Q, 0);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_csv(line);
    if (parts.size() != 3) throw std::invalid_argument("bad missing row: " + line);
    const auto it = unit_to_idx.find(std::stoi(parts[0]) - 1);
    if (it == unit_to_idx.end()) continue;  // cell not in this sample
    const int t = std::stoi(parts[1]) - 1;
    const int q = std::stoi(parts[2]) - 1;
    s.missing[(static_cast<std::size_t>(it->second) * s.T + t) * s.Q + q] = 1;
  }
}

// ---- chain draws -----------------------------------------------------------

inline void write_draws(const std::string& path, const ChainDraws& d) {
  auto f = detail::open_out(path);
  f << "# seed=" << d.meta.seed << '\n';
  f << "# config_hash=" << d.meta.config_hash << '\n';
  f << "# iterations=" << d.meta.iterations << " burn_in=" << d.meta.burn_in
    << " thin=" << d.meta.thin << '\n';
  f << "# wall_time_sec=" << fmt_double(d.meta.wall_time_sec) << '\n';
  f << "# stuck_events=" << d.meta.stuck_events << '\n';
  if (!d.meta.method.empty()) f << "# method=" << d.meta.method << " K=" << d.meta.K << '\n';
  for (std::size_t p = 0; p < d.names.size(); ++p) f << (p ? "," : "") << d.names[p];
  f << '\n';
  for (int s = 0; s < d.draws.rows(); ++s) {
    for (int p = 0; p < d.draws.cols(); ++p) f << (p ? "," : "") << fmt_double(d.draws(s, p));
    f << '\n';
  }
}

inline ChainDraws read_draws(const std::string& path) {
  auto f = detail::open_in(path);
  ChainDraws d;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool have_names = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream is(line.substr(1));
      std::string tok;
      while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "seed") d.meta.seed = std::stoull(val);
        else if (key == "config_hash") d.meta.config_hash = val;
        else if (key == "iterations") d.meta.iterations = std::stoi(val);
        else if (key == "burn_in") d.meta.burn_in = std::stoi(val);
        else if (key == "thin") d.meta.thin = std::stoi(val);
        else if (key == "wall_time_sec") d.meta.wall_time_sec = std::stod(val);
        else if (key == "stuck_events") d.meta.stuck_events = std::stol(val);
        else if (key == "method") d.meta.method = val;
        else if (key == "K") d.meta.K = std::stoi(val);
      }
      continue;
    }
    if (!have_names) {
      d.names = detail::split_csv(line);
      have_names = true;
      continue;
    }
    const auto parts = detail::split_csv(line);
    if (parts.size() != d.names.size())
      throw std::invalid_argument("schema mismatch in " + path + ": ragged draw row");
    std::vector<double> row(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) row[i] = std::stod(parts[i]);
    rows.push_back(std::move(row));
  }
  if (!have_names) throw std::invalid_argument("no parameter names in " + path);
  d.draws.resize(static_cast<int>(rows.size()), static_cast<int>(d.names.size()));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t p = 0; p < rows[s].size(); ++p)
      d.draws(static_cast<int>(s), static_cast<int>(p)) = rows[s][p];
  return d;
}

// ---- reports ----------------------------------------------------------------

inline void write_accuracy(const std::string& path, const AccuracyReport& r) {
  auto f = detail::open_out(path);
  f << "parameter,accuracy\n";
  for (std::size_t p = 0; p < r.names.size(); ++p)
    f << r.names[p] << ',' << fmt_double(r.accuracy[static_cast<int>(p)]) << '\n';
}

inline AccuracyReport read_accuracy(const std::string& path) {
  auto f = detail::open_in(path);
  std::string line;
  std::getline(f, line);
  detail::expect_header(line, "parameter,accuracy", path);
  AccuracyReport r;
  std::vector<double> vals;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto parts = detail::split_csv(line);
    if (parts.size() != 2) throw std::invalid_argument("bad accuracy row: " + line);
    r.names.push_back(parts[0]);
    vals.push_back(std::stod(parts[1]));
  }
  r.accuracy = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<long>(vals.size()));
  r.mean_accuracy = vals.empty() ? 0.0 : r.accuracy.mean();
  return r;
}

inline void write_timing(const std::string& path,
                         const std::vector<std::pair<std::string, double>>& rows) {
  auto f = detail::open_out(path);
  f << "label,seconds\n";
  for (const auto& [label, sec] : rows) f << label << ',' << fmt_double(sec) << '\n';
}

inline void write_imputed(const std::string& path, const CaseData& data,
                          const SurveySample& sample, const std::vector<ImputedCell>& cells) {
  auto f = detail::open_out(path);
  f << "case,unit,month,response,post_mean\n";
  for (const auto& cell : cells) {
    const int c = cell.case_index;
    f << (c + 1) << ',' << (sample.unit_ids[data.unit[c]] + 1) << ',' << (data.month[c] + 1)
      << ',' << (cell.q + 1) << ',' << fmt_double(cell.post_mean) << '\n';
  }
}

}  // namespace gwpp

#endif  // GWPP_IO_HPP
