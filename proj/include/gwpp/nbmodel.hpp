#ifndef GWPP_NBMODEL_HPP
#define GWPP_NBMODEL_HPP

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gwpp/car.hpp"
#include "gwpp/design.hpp"
#include "gwpp/ess.hpp"
#include "gwpp/matrix_normal.hpp"
#include "gwpp/rng.hpp"
#include "gwpp/slice.hpp"
#include "gwpp/wishart.hpp"

namespace gwpp {

// One row per establishment-month case. Weights repeat the establishment
// weight across its months; y holds the Q count responses with an observed
// flag per cell (held-out cells contribute nothing to any kernel).
struct CaseData {
  int Q = 0, T = 0, L = 0;
  std::vector<int> unit;      // establishment index within the sample
  std::vector<int> month;     // 0-based
  std::vector<int> industry;  // 0-based, -1 when L == 0
  Eigen::VectorXd z;          // magnitude covariate for the random effects
  Eigen::VectorXd w;          // scaled sampling weight
  Eigen::MatrixXd y;          // n_cases x Q
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> obs;
  Eigen::VectorXd w_sum_q;    // per response: sum of weights over observed cells

  // With no random-effect covariate every case of month t shares one log
  // mean per response, so the Theta kernel regroups exactly into per-(q,t)
  // weight and weighted-count totals. Cached here; the kernel then costs
  // O(Q*T) per evaluation instead of a pass over the cases.
  bool separable = false;
  Eigen::MatrixXd sw_qt;   // Q x T: sum of w over observed cells
  Eigen::MatrixXd swy_qt;  // Q x T: sum of w*y over observed cells

  int n_cases() const { return static_cast<int>(month.size()); }

  void finalize() {
    const int nc = n_cases();
    if (nc == 0) throw std::invalid_argument("CaseData: no cases");
    if ((w.array() <= 0.0).any()) throw std::invalid_argument("CaseData: weights must be positive");
    w_sum_q = Eigen::VectorXd::Zero(Q);
    separable = true;
    for (int c = 0; c < nc; ++c) {
      if (industry[c] >= 0 && z[c] != 0.0) separable = false;
      for (int q = 0; q < Q; ++q)
        if (obs(c, q)) w_sum_q[q] += w[c];
    }
    if (separable) {
      sw_qt = Eigen::MatrixXd::Zero(Q, T);
      swy_qt = Eigen::MatrixXd::Zero(Q, T);
      for (int c = 0; c < nc; ++c) {
        const int t = month[c];
        for (int q = 0; q < Q; ++q) {
          if (!obs(c, q)) continue;
          sw_qt(q, t) += w[c];
          swy_qt(q, t) += w[c] * y(c, q);
        }
      }
    }
  }
};

// Expands a survey sample (or one subset of it) into cases. Weights are the
// per-establishment scaled weights aligned with `units`.
inline CaseData build_case_data(const SurveySample& sample, const std::vector<int>& units,
                                const std::vector<double>& weights) {
  if (units.size() != weights.size())
    throw std::invalid_argument("build_case_data: units and weights misaligned");
  CaseData d;
  d.Q = sample.Q;
  d.T = sample.T;
  d.L = sample.L;
  const int nc = static_cast<int>(units.size()) * sample.T;
  d.unit.reserve(nc);
  d.month.reserve(nc);
  d.industry.reserve(nc);
  d.z.resize(nc);
  d.w.resize(nc);
  d.y.resize(nc, sample.Q);
  d.obs.resize(nc, sample.Q);
  int c = 0;
  for (std::size_t k = 0; k < units.size(); ++k) {
    const int i = units[k];
    for (int t = 0; t < sample.T; ++t, ++c) {
      d.unit.push_back(i);
      d.month.push_back(t);
      d.industry.push_back(sample.L > 0 ? sample.strata[i] : -1);
      d.z[c] = sample.L > 0 ? 1.0 : 0.0;
      d.w[c] = weights[k];
      for (int q = 0; q < sample.Q; ++q) {
        d.y(c, q) = static_cast<double>(sample.yval(i, t, q));
        d.obs(c, q) = sample.is_missing(i, t, q) ? 0 : 1;
      }
    }
  }
  d.finalize();
  return d;
}

inline CaseData full_sample_cases(const SurveySample& sample) {
  std::vector<int> units(sample.n);
  std::vector<double> weights(sample.n);
  for (int i = 0; i < sample.n; ++i) {
    units[i] = i;
    weights[i] = sample.norm_w[i];
  }
  return build_case_data(sample, units, weights);
}

inline CaseData subset_cases(const SurveySample& sample, const SubsetAssignment& a, int j) {
  if (j < 0 || j >= a.K) throw std::invalid_argument("subset_cases: subset index out of range");
  if (a.subset_w.empty() || a.subset_w[j].size() != a.membership[j].size())
    throw std::invalid_argument("subset_cases: assignment has no weights");
  return build_case_data(sample, a.membership[j], a.subset_w[j]);
}

// log(tau + exp(psi)) without overflow for large psi.
inline double log_tau_plus_exp(double tau, double psi) {
  if (psi > 30.0) return psi + std::log1p(tau * std::exp(-psi));
  return std::log(tau + std::exp(psi));
}

// Sampling-weighted negative binomial kernel in Theta:
//   sum_q sum_c w_c [ -(tau_q + y_cq) log(tau_q + exp(theta_{q,t(c)} + gamma z)) + y_cq theta_{q,t(c)} ]
inline double log_kernel_theta(const Eigen::MatrixXd& Theta, const CaseData& data,
                               const std::vector<Eigen::MatrixXd>& Gamma,
                               const Eigen::VectorXd& tau) {
  const int nc = data.n_cases();
  double total = 0.0;
  if (data.separable) {
    for (int q = 0; q < data.Q; ++q)
      for (int t = 0; t < data.T; ++t) {
        const double theta = Theta(q, t);
        total += -log_tau_plus_exp(tau[q], theta) *
                     (tau[q] * data.sw_qt(q, t) + data.swy_qt(q, t)) +
                 theta * data.swy_qt(q, t);
      }
    if (!std::isfinite(total)) throw std::runtime_error("log_kernel_theta: numeric overflow");
    return total;
  }
  for (int c = 0; c < nc; ++c) {
    const int t = data.month[c];
    const int l = data.industry[c];
    const double wc = data.w[c];
    for (int q = 0; q < data.Q; ++q) {
      if (!data.obs(c, q)) continue;
      const double theta = Theta(q, t);
      const double off = (l >= 0 && !Gamma.empty()) ? Gamma[l](q, t) * data.z[c] : 0.0;
      const double y = data.y(c, q);
      total += wc * (-(tau[q] + y) * log_tau_plus_exp(tau[q], theta + off) + y * theta);
    }
  }
  if (!std::isfinite(total)) throw std::runtime_error("log_kernel_theta: numeric overflow");
  return total;
}

// Same kernel with the roles of Theta and Gamma swapped, restricted to the
// cases of industry l.
inline double log_kernel_gamma(const Eigen::MatrixXd& Gamma_l, int l, const CaseData& data,
                               const Eigen::MatrixXd& Theta, const Eigen::VectorXd& tau) {
  const int nc = data.n_cases();
  double total = 0.0;
  for (int c = 0; c < nc; ++c) {
    if (data.industry[c] != l) continue;
    const int t = data.month[c];
    const double wc = data.w[c];
    for (int q = 0; q < data.Q; ++q) {
      if (!data.obs(c, q)) continue;
      const double g = Gamma_l(q, t) * data.z[c];
      const double y = data.y(c, q);
      total += wc * (-(tau[q] + y) * log_tau_plus_exp(tau[q], Theta(q, t) + g) + y * g);
    }
  }
  if (!std::isfinite(total)) throw std::runtime_error("log_kernel_gamma: numeric overflow");
  return total;
}

// Log pseudo posterior of the dispersion tau_q given the log means of
// response q, including the half-Cauchy prior on tau^{-1/2}.
inline double log_post_tau_psi(double tau_q, int q, const CaseData& data,
                               const Eigen::VectorXd& psi_q) {
  if (tau_q <= 0.0) throw std::invalid_argument("log_post_tau: domain error, tau must be positive");
  const int nc = data.n_cases();
  double total = data.w_sum_q[q] * (tau_q * std::log(tau_q) - std::lgamma(tau_q));
  for (int c = 0; c < nc; ++c) {
    if (!data.obs(c, q)) continue;
    const double y = data.y(c, q);
    total += data.w[c] *
             (-(tau_q + y) * log_tau_plus_exp(tau_q, psi_q[c]) + std::lgamma(tau_q + y));
  }
  total += -0.5 * std::log(tau_q) - std::log1p(tau_q);
  if (!std::isfinite(total)) throw std::runtime_error("log_post_tau: numeric overflow");
  return total;
}

inline Eigen::VectorXd case_log_means(int q, const CaseData& data, const Eigen::MatrixXd& Theta,
                                      const std::vector<Eigen::MatrixXd>& Gamma) {
  const int nc = data.n_cases();
  Eigen::VectorXd psi(nc);
  for (int c = 0; c < nc; ++c) {
    const int t = data.month[c];
    const int l = data.industry[c];
    psi[c] = Theta(q, t);
    if (l >= 0 && !Gamma.empty()) psi[c] += Gamma[l](q, t) * data.z[c];
  }
  return psi;
}

inline double log_post_tau(double tau_q, int q, const CaseData& data,
                           const Eigen::MatrixXd& Theta,
                           const std::vector<Eigen::MatrixXd>& Gamma) {
  return log_post_tau_psi(tau_q, q, data, case_log_means(q, data, Theta, Gamma));
}

struct ModelState {
  Eigen::MatrixXd Theta;               // Q x T
  std::vector<Eigen::MatrixXd> Gamma;  // L of Q x T
  Eigen::VectorXd tau;                 // Q
  Eigen::MatrixXd P2, P8;              // Q x Q precisions
  double rho3 = 0.5, rho6 = 0.5;
  Eigen::VectorXd a2, a8;
  double nu = 2.0;

  static ModelState neutral(int Q, int T, int L, double nu = 2.0) {
    ModelState s;
    s.Theta = Eigen::MatrixXd::Zero(Q, T);
    for (int l = 0; l < L; ++l) s.Gamma.push_back(Eigen::MatrixXd::Zero(Q, T));
    s.tau = Eigen::VectorXd::Ones(Q);
    s.P2 = Eigen::MatrixXd::Identity(Q, Q);
    s.P8 = Eigen::MatrixXd::Identity(Q, Q);
    s.a2 = Eigen::VectorXd::Ones(Q);
    s.a8 = Eigen::VectorXd::Ones(Q);
    s.nu = nu;
    return s;
  }
};

struct UpdateFlags {
  bool theta = true;
  bool gamma = true;
  bool tau = true;
  bool p2 = true;
  bool p8 = true;
  bool rho3 = true;
  bool rho6 = true;
};

struct ChainConfig {
  int iterations = 15000;
  int burn_in = 10000;
  int thin = 5;
  std::uint64_t seed = 0;
  UpdateFlags blocks;
  double nu = 2.0;
  // Elliptical slice transitions applied per matrix block each sweep. The
  // slice step is roughly one posterior standard deviation when the
  // likelihood is much tighter than the prior, so a short burst of moves
  // decorrelates the intercepts far faster than one move per sweep.
  int ess_repeats = 8;

  void validate() const {
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations || thin < 1)
      throw std::invalid_argument("ChainConfig: need 0 <= burn_in < iterations and thin >= 1");
    if (ess_repeats < 1) throw std::invalid_argument("ChainConfig: ess_repeats must be >= 1");
  }
  int retained() const { return (iterations - burn_in) / thin; }
};

struct ChainMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
  double wall_time_sec = 0.0;
  int iterations = 0, burn_in = 0, thin = 0;
  long stuck_events = 0;
  std::string method;  // set on combined draws
  int K = 0;
};

struct ChainDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd draws;  // retained x parameters
  ChainMeta meta;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("ChainDraws: no parameter named " + name);
  }
};

inline std::string theta_name(int q, int t) {
  return "theta[" + std::to_string(q + 1) + "][" + std::to_string(t + 1) + "]";
}
inline std::string gamma_name(int l, int q, int t) {
  return "gamma[" + std::to_string(l + 1) + "][" + std::to_string(q + 1) + "][" +
         std::to_string(t + 1) + "]";
}
inline std::string tau_name(int q) { return "tau[" + std::to_string(q + 1) + "]"; }

inline std::vector<std::string> parameter_names(int Q, int T, int L) {
  std::vector<std::string> names;
  for (int q = 0; q < Q; ++q)
    for (int t = 0; t < T; ++t) names.push_back(theta_name(q, t));
  for (int l = 0; l < L; ++l)
    for (int q = 0; q < Q; ++q)
      for (int t = 0; t < T; ++t) names.push_back(gamma_name(l, q, t));
  for (int q = 0; q < Q; ++q) names.push_back(tau_name(q));
  return names;
}

inline std::string chain_config_hash(const ChainConfig& cfg, const CaseData& data) {
  std::ostringstream os;
  os << "it=" << cfg.iterations << ";burn=" << cfg.burn_in << ";thin=" << cfg.thin
     << ";nu=" << cfg.nu << ";reps=" << cfg.ess_repeats << ";Q=" << data.Q << ";T=" << data.T
     << ";L=" << data.L << ";blocks=" << cfg.blocks.theta << cfg.blocks.gamma << cfg.blocks.tau
     << cfg.blocks.p2 << cfg.blocks.p8 << cfg.blocks.rho3 << cfg.blocks.rho6;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : os.str()) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 0x100000001b3ull;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

// Full Gibbs sweep for the weighted hierarchical NB model. Per iteration:
// elliptical slice moves for Theta and each Gamma_l, log-scale slice moves
// for each tau_q, conjugate Wishart draws for the response-side precisions
// with their expansion scales, and logit-scale slice moves for the CAR
// association parameters.
inline ChainDraws run_chain(const CaseData& data, const ChainConfig& cfg) {
  cfg.validate();
  if (data.n_cases() == 0) throw std::invalid_argument("run_chain: data nonempty required");
  const int Q = data.Q, T = data.T, L = data.L;
  Rng rng(cfg.seed);
  ModelState st = ModelState::neutral(Q, T, L, cfg.nu);

  const Eigen::MatrixXd omega = path_adjacency(T);
  const Eigen::VectorXd drow = omega.rowwise().sum();
  const CarLogDet car_logdet(T);
  auto car_of = [&](double rho) -> Eigen::MatrixXd {
    return Eigen::MatrixXd(drow.asDiagonal()) - rho * omega;
  };

  const std::vector<std::string> names = parameter_names(Q, T, L);
  const int S = cfg.retained();
  ChainDraws out;
  out.names = names;
  out.draws.resize(S, static_cast<int>(names.size()));
  out.meta.seed = cfg.seed;
  out.meta.config_hash = chain_config_hash(cfg, data);
  out.meta.iterations = cfg.iterations;
  out.meta.burn_in = cfg.burn_in;
  out.meta.thin = cfg.thin;

  long stuck = 0;
  int row = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 1; it <= cfg.iterations; ++it) {
    try {
      if (cfg.blocks.theta) {
        const Eigen::MatrixXd p3 = car_of(st.rho3);
        auto prior = [&](Rng& r) {
          return sample_matrix_normal(Eigen::MatrixXd::Zero(Q, T), st.P2, p3, r);
        };
        auto loglik = [&](const Eigen::MatrixXd& th) {
          return log_kernel_theta(th, data, st.Gamma, st.tau);
        };
        for (int rep = 0; rep < cfg.ess_repeats; ++rep) {
          const EssResult r = ess_update(st.Theta, prior, loglik, rng);
          if (r.stuck) ++stuck;
        }
      }
      if (L > 0 && cfg.blocks.gamma) {
        const Eigen::MatrixXd p6 = car_of(st.rho6);
        for (int l = 0; l < L; ++l) {
          auto prior = [&](Rng& r) {
            return sample_matrix_normal(Eigen::MatrixXd::Zero(Q, T), st.P8, p6, r);
          };
          auto loglik = [&](const Eigen::MatrixXd& g) {
            return log_kernel_gamma(g, l, data, st.Theta, st.tau);
          };
          for (int rep = 0; rep < cfg.ess_repeats; ++rep) {
            const EssResult r = ess_update(st.Gamma[l], prior, loglik, rng);
            if (r.stuck) ++stuck;
          }
        }
      }
      if (cfg.blocks.tau) {
        for (int q = 0; q < Q; ++q) {
          const Eigen::VectorXd psi = case_log_means(q, data, st.Theta, st.Gamma);
          // Sampled on the log scale; the +phi term is the Jacobian.
          auto target = [&](double phi) {
            return log_post_tau_psi(std::exp(phi), q, data, psi) + phi;
          };
          const double phi =
              slice_update_scalar(std::log(st.tau[q]), target, -40.0, 40.0, rng);
          st.tau[q] = std::exp(phi);
        }
      }
      if (cfg.blocks.p2) {
        st.P2 = update_precision_wishart({&st.Theta}, car_of(st.rho3), st.a2, st.nu, rng);
        st.a2 = update_huangwand_scales(st.P2, st.nu, rng);
      }
      if (L > 0 && cfg.blocks.p8) {
        std::vector<const Eigen::MatrixXd*> effs;
        for (const auto& g : st.Gamma) effs.push_back(&g);
        st.P8 = update_precision_wishart(effs, car_of(st.rho6), st.a8, st.nu, rng);
        st.a8 = update_huangwand_scales(st.P8, st.nu, rng);
      }
      if (cfg.blocks.rho3) {
        const Eigen::MatrixXd m = st.Theta.transpose() * st.P2 * st.Theta;
        const double sd = (drow.array() * m.diagonal().array()).sum();
        double so = 0.0;
        for (int t = 0; t + 1 < T; ++t) so += 2.0 * m(t, t + 1);
        auto target = [&](double phi) {  // logit scale with Jacobian
          const double rho = 1.0 / (1.0 + std::exp(-phi));
          return 0.5 * Q * car_logdet(rho) - 0.5 * (sd - rho * so) +
                 std::log(rho * (1.0 - rho));
        };
        const double phi = slice_update_scalar(std::log(st.rho3 / (1.0 - st.rho3)), target,
                                               -40.0, 40.0, rng);
        st.rho3 = 1.0 / (1.0 + std::exp(-phi));
      }
      if (L > 0 && cfg.blocks.rho6) {
        double sd = 0.0, so = 0.0;
        for (const auto& g : st.Gamma) {
          const Eigen::MatrixXd m = g.transpose() * st.P8 * g;
          sd += (drow.array() * m.diagonal().array()).sum();
          for (int t = 0; t + 1 < T; ++t) so += 2.0 * m(t, t + 1);
        }
        auto target = [&](double phi) {
          const double rho = 1.0 / (1.0 + std::exp(-phi));
          return 0.5 * Q * L * car_logdet(rho) - 0.5 * (sd - rho * so) +
                 std::log(rho * (1.0 - rho));
        };
        const double phi = slice_update_scalar(std::log(st.rho6 / (1.0 - st.rho6)), target,
                                               -40.0, 40.0, rng);
        st.rho6 = 1.0 / (1.0 + std::exp(-phi));
      }
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "chain aborted at iteration " << it << ": " << e.what() << " [seed=" << cfg.seed
         << " Q=" << Q << " T=" << T << " L=" << L << " tau=" << st.tau.transpose() << "]";
      throw std::runtime_error(os.str());
    }

    if (it > cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 && row < S) {
      int col = 0;
      for (int q = 0; q < Q; ++q)
        for (int t = 0; t < T; ++t) out.draws(row, col++) = st.Theta(q, t);
      for (int l = 0; l < L; ++l)
        for (int q = 0; q < Q; ++q)
          for (int t = 0; t < T; ++t) out.draws(row, col++) = st.Gamma[l](q, t);
      for (int q = 0; q < Q; ++q) out.draws(row, col++) = st.tau[q];
      if (!out.draws.row(row).allFinite()) {
        std::ostringstream os;
        os << "chain aborted at iteration " << it << ": nonfinite draw emitted";
        throw std::runtime_error(os.str());
      }
      ++row;
    }
  }
  out.meta.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.meta.stuck_events = stuck;
  return out;
}

struct ImputedCell {
  int case_index = 0;
  int q = 0;
  double post_mean = 0.0;        // posterior mean of exp(psi)
  Eigen::VectorXd pred_draws;    // negative binomial predictive draws
};

// Posterior-predictive imputation for held-out cells. Works off parameter
// names so full-sample, subset, and combined draws are all accepted.
inline std::vector<ImputedCell> posterior_predictive_impute(const ChainDraws& draws,
                                                            const CaseData& data, Rng& rng,
                                                            bool with_pred_draws = true) {
  if (draws.draws.rows() == 0) throw std::invalid_argument("impute: draws nonempty required");
  const int S = static_cast<int>(draws.draws.rows());
  std::vector<int> theta_cols(static_cast<std::size_t>(data.Q) * data.T);
  for (int q = 0; q < data.Q; ++q)
    for (int t = 0; t < data.T; ++t)
      theta_cols[q * data.T + t] = draws.column(theta_name(q, t));
  std::vector<int> gamma_cols;
  if (data.L > 0) {
    gamma_cols.resize(static_cast<std::size_t>(data.L) * data.Q * data.T);
    for (int l = 0; l < data.L; ++l)
      for (int q = 0; q < data.Q; ++q)
        for (int t = 0; t < data.T; ++t)
          gamma_cols[(l * data.Q + q) * data.T + t] = draws.column(gamma_name(l, q, t));
  }
  std::vector<int> tau_cols(data.Q);
  for (int q = 0; q < data.Q; ++q) tau_cols[q] = draws.column(tau_name(q));

  std::vector<ImputedCell> out;
  for (int c = 0; c < data.n_cases(); ++c) {
    for (int q = 0; q < data.Q; ++q) {
      if (data.obs(c, q)) continue;
      ImputedCell cell;
      cell.case_index = c;
      cell.q = q;
      if (with_pred_draws) cell.pred_draws.resize(S);
      const int t = data.month[c];
      const int l = data.industry[c];
      double acc = 0.0;
      for (int s = 0; s < S; ++s) {
        double psi = draws.draws(s, theta_cols[q * data.T + t]);
        if (l >= 0 && data.L > 0)
          psi += draws.draws(s, gamma_cols[(l * data.Q + q) * data.T + t]) * data.z[c];
        const double mu = std::exp(psi);
        acc += mu;
        if (with_pred_draws) {
          const double tau = draws.draws(s, tau_cols[q]);
          cell.pred_draws[s] = static_cast<double>(rng.negative_binomial(tau, mu));
        }
      }
      cell.post_mean = acc / S;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace gwpp

#endif  // GWPP_NBMODEL_HPP
