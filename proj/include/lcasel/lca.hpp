#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcasel/dataset.hpp"
#include "lcasel/rng.hpp"

namespace lcasel {

// Numerical failure: every EM restart collapsed to a degenerate solution.
struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  int n_restarts = 10;
  int max_iter = 1000;
  double rel_tol = 1e-8;
  std::uint64_t seed = 0;
  double smoothing_eps = 1e-10;

  void validate() const {
    if (n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(rel_tol > 0)) throw std::invalid_argument("rel_tol must be > 0");
    if (!(smoothing_eps > 0 && smoothing_eps < 0.5))
      throw std::invalid_argument("smoothing_eps must lie in (0, 0.5)");
  }
};

// Fitted latent class model on a subset of variables.
// tau sums to 1; every theta row sums to 1 and stays inside the smoothing
// clamp; bic = 2*loglik - n_params*log(n_rows) by construction.
struct LcaModel {
  int g = 0;
  std::vector<int> vars;  // dataset variable indices, ascending
  std::vector<double> tau;
  std::vector<std::vector<std::vector<double>>> theta;  // [class][var][cat]
  double loglik = 0.0;
  double bic = 0.0;
  int n_params = 0;
  int n_rows = 0;
  std::vector<double> posterior;  // n_rows x g, row-major
  std::vector<int> z_hat;         // MAP labels, 1-based
};

struct FitDiagnostics {
  struct Restart {
    std::vector<double> loglik_history;  // one entry per EM iteration
    double loglik = -std::numeric_limits<double>::infinity();
    bool degenerate = false;
    bool converged = false;
  };
  std::vector<Restart> restarts;
};

// Largest G satisfying the necessary identifiability inequality
// prod(C_m) > (sum(C_m) - M + 1) * G, floored at 1 and capped at g_max.
// A one-class model is always estimable, hence the floor.
inline int max_identifiable_g(std::span<const int> n_categories,
                              long long g_max) {
  if (n_categories.empty())
    throw std::invalid_argument("empty variable list");
  const unsigned long long kLimit = 1ULL << 62;
  unsigned long long prod = 1;
  long long sum = 0;
  bool saturated = false;
  for (int c : n_categories) {
    if (c < 2) throw std::invalid_argument("categories must be >= 2");
    sum += c;
    if (!saturated) {
      if (prod > kLimit / static_cast<unsigned long long>(c)) {
        saturated = true;
      } else {
        prod *= static_cast<unsigned long long>(c);
      }
    }
  }
  const long long k = sum - static_cast<long long>(n_categories.size()) + 1;
  long long g_star;
  if (saturated) {
    g_star = std::numeric_limits<long long>::max();
  } else {
    g_star = static_cast<long long>((prod - 1) / static_cast<unsigned long long>(k));
  }
  g_star = std::max<long long>(1, std::min<long long>(g_max, g_star));
  return static_cast<int>(std::min<long long>(
      g_star, std::numeric_limits<int>::max()));
}

namespace detail {

// Rows collapsed to distinct response patterns with multiplicities. All
// EM arithmetic runs on patterns; per-row quantities are expanded at the
// end. Pattern codes are stored pre-offset into the flattened theta
// layout so the E-step reduces to indexed gathers.
struct PatternTable {
  int n_patterns = 0;
  int n_vars = 0;
  int total_cats = 0;               // sum of category counts over vars
  std::vector<int> offset;          // per-variable offset into theta row
  std::vector<int> codes;           // n_patterns x n_vars, offset-added
  std::vector<double> weight;       // pattern multiplicities
  std::vector<int> row_pattern;     // row -> pattern index
};

inline PatternTable build_patterns(const CategoricalDataset& data,
                                   std::span<const int> vars) {
  PatternTable pt;
  pt.n_vars = static_cast<int>(vars.size());
  pt.offset.resize(pt.n_vars);
  for (int m = 0; m < pt.n_vars; ++m) {
    pt.offset[m] = pt.total_cats;
    pt.total_cats += data.n_categories[vars[m]];
  }

  // Radix key when the joint category space fits in 62 bits.
  unsigned long long space = 1;
  bool radix = true;
  for (int m = 0; m < pt.n_vars && radix; ++m) {
    const auto c = static_cast<unsigned long long>(data.n_categories[vars[m]]);
    if (space > (1ULL << 62) / c) radix = false;
    else space *= c;
  }

  pt.row_pattern.resize(data.n_rows);
  if (radix) {
    std::unordered_map<unsigned long long, int> seen;
    seen.reserve(static_cast<std::size_t>(data.n_rows) * 2);
    for (int n = 0; n < data.n_rows; ++n) {
      unsigned long long key = 0;
      for (int m = 0; m < pt.n_vars; ++m)
        key = key * static_cast<unsigned long long>(
                        data.n_categories[vars[m]]) +
              static_cast<unsigned long long>(data.code(n, vars[m]));
      auto [it, inserted] = seen.try_emplace(key, pt.n_patterns);
      if (inserted) {
        ++pt.n_patterns;
        for (int m = 0; m < pt.n_vars; ++m)
          pt.codes.push_back(pt.offset[m] + data.code(n, vars[m]));
        pt.weight.push_back(0.0);
      }
      pt.row_pattern[n] = it->second;
      pt.weight[it->second] += 1.0;
    }
  } else {
    std::map<std::vector<int>, int> seen;
    std::vector<int> key(pt.n_vars);
    for (int n = 0; n < data.n_rows; ++n) {
      for (int m = 0; m < pt.n_vars; ++m) key[m] = data.code(n, vars[m]);
      auto [it, inserted] = seen.try_emplace(key, pt.n_patterns);
      if (inserted) {
        ++pt.n_patterns;
        for (int m = 0; m < pt.n_vars; ++m)
          pt.codes.push_back(pt.offset[m] + key[m]);
        pt.weight.push_back(0.0);
      }
      pt.row_pattern[n] = it->second;
      pt.weight[it->second] += 1.0;
    }
  }
  return pt;
}

struct LcaParams {
  std::vector<double> tau;        // g
  std::vector<double> log_tau;    // g
  std::vector<double> theta;      // g * total_cats
  std::vector<double> log_theta;  // g * total_cats
};

inline void clamp_renorm(std::span<double> probs, double eps) {
  double sum = 0.0;
  for (double& p : probs) {
    p = std::min(std::max(p, eps), 1.0 - eps);
    sum += p;
  }
  for (double& p : probs) p /= sum;
}

// Responsibility-weighted maximum likelihood update with the smoothing
// clamp applied to every probability row.
inline void m_step(const PatternTable& pt,
                   const CategoricalDataset& data, std::span<const int> vars,
                   const std::vector<double>& resp, int g, double n_total,
                   double eps, LcaParams& params) {
  const int t = pt.total_cats;
  params.tau.assign(g, 0.0);
  params.theta.assign(static_cast<std::size_t>(g) * t, 0.0);
  for (int p = 0; p < pt.n_patterns; ++p) {
    const int* pc = &pt.codes[static_cast<std::size_t>(p) * pt.n_vars];
    const double* r = &resp[static_cast<std::size_t>(p) * g];
    for (int k = 0; k < g; ++k) {
      const double w = r[k];
      if (w == 0.0) continue;
      params.tau[k] += w;
      double* row = &params.theta[static_cast<std::size_t>(k) * t];
      for (int m = 0; m < pt.n_vars; ++m) row[pc[m]] += w;
    }
  }
  std::vector<double> class_mass = params.tau;
  for (double& v : params.tau) v /= n_total;
  clamp_renorm(params.tau, eps);
  for (int k = 0; k < g; ++k) {
    double* row = &params.theta[static_cast<std::size_t>(k) * t];
    for (int m = 0; m < pt.n_vars; ++m) {
      const int c = data.n_categories[vars[m]];
      std::span<double> cell(row + pt.offset[m], static_cast<std::size_t>(c));
      if (class_mass[k] > 0) {
        for (double& v : cell) v /= class_mass[k];
      } else {
        for (double& v : cell) v = 1.0 / c;  // dead class, kept proper
      }
      clamp_renorm(cell, eps);
    }
  }
  params.log_tau.resize(g);
  for (int k = 0; k < g; ++k) params.log_tau[k] = std::log(params.tau[k]);
  params.log_theta.resize(params.theta.size());
  for (std::size_t i = 0; i < params.theta.size(); ++i)
    params.log_theta[i] = std::log(params.theta[i]);
}

// Computes the observed-data log-likelihood of params and refreshes the
// weighted responsibilities. Returns the log-likelihood.
inline double e_step(const PatternTable& pt, const LcaParams& params, int g,
                     std::vector<double>& resp) {
  const int t = pt.total_cats;
  double loglik = 0.0;
  std::vector<double> s(g);
  for (int p = 0; p < pt.n_patterns; ++p) {
    const int* pc = &pt.codes[static_cast<std::size_t>(p) * pt.n_vars];
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < g; ++k) {
      double acc = params.log_tau[k];
      const double* lt = &params.log_theta[static_cast<std::size_t>(k) * t];
      for (int m = 0; m < pt.n_vars; ++m) acc += lt[pc[m]];
      s[k] = acc;
      if (acc > mx) mx = acc;
    }
    double z = 0.0;
    for (int k = 0; k < g; ++k) z += std::exp(s[k] - mx);
    const double lse = mx + std::log(z);
    const double w = pt.weight[p];
    loglik += w * lse;
    double* r = &resp[static_cast<std::size_t>(p) * g];
    for (int k = 0; k < g; ++k) r[k] = w * std::exp(s[k] - lse);
  }
  return loglik;
}

inline std::uint64_t hash_vars_g(std::span<const int> vars, int g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int v : vars) h = mix64(h ^ static_cast<std::uint64_t>(v + 1));
  return mix64(h ^ static_cast<std::uint64_t>(g));
}

}  // namespace detail

inline int lca_n_params(const CategoricalDataset& data,
                        std::span<const int> vars, int g) {
  int s = 0;
  for (int v : vars) s += data.n_categories[v] - 1;
  return (g - 1) + g * s;
}

// Fits a G-class latent class model by EM with random restarts and
// returns the restart with the highest converged log-likelihood.
// Restart RNG streams derive from (config.seed, variable set, G, restart
// index), so results do not depend on evaluation order.
inline LcaModel fit_lca(const CategoricalDataset& data,
                        std::span<const int> vars_in, int g,
                        const FitConfig& config,
                        FitDiagnostics* diag = nullptr) {
  config.validate();
  if (g < 1) throw std::invalid_argument("g must be >= 1");
  if (vars_in.empty()) throw std::invalid_argument("empty variable set");
  std::vector<int> vars(vars_in.begin(), vars_in.end());
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  for (int v : vars)
    if (v < 0 || v >= data.n_vars)
      throw std::invalid_argument("variable index out of range");

  const auto pt = detail::build_patterns(data, vars);
  const double n_total = static_cast<double>(data.n_rows);
  const double degenerate_floor = 1.0 / (10.0 * n_total);
  const std::uint64_t fit_seed =
      derive_seed(config.seed, detail::hash_vars_g(vars, g));

  // All restarts coincide for a one-class model.
  const int n_restarts = (g == 1) ? 1 : config.n_restarts;

  detail::LcaParams best_params;
  double best_loglik = -std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<double> resp(static_cast<std::size_t>(pt.n_patterns) * g);
  std::vector<double> row_resp(g);
  for (int r = 0; r < n_restarts; ++r) {
    // Init: per-row responsibilities uniform on the simplex, aggregated
    // to pattern level, then a first M-step.
    Rng rng(derive_seed(fit_seed, static_cast<std::uint64_t>(r)));
    std::fill(resp.begin(), resp.end(), 0.0);
    for (int n = 0; n < data.n_rows; ++n) {
      rng.simplex(row_resp);
      double* dst = &resp[static_cast<std::size_t>(pt.row_pattern[n]) * g];
      for (int k = 0; k < g; ++k) dst[k] += row_resp[k];
    }

    detail::LcaParams params;
    detail::m_step(pt, data, vars, resp, g, n_total, config.smoothing_eps,
                   params);
    double ll = detail::e_step(pt, params, g, resp);
    FitDiagnostics::Restart rec;
    rec.loglik_history.push_back(ll);
    bool converged = false;
    for (int iter = 1; iter < config.max_iter; ++iter) {
      detail::m_step(pt, data, vars, resp, g, n_total, config.smoothing_eps,
                     params);
      const double ll_new = detail::e_step(pt, params, g, resp);
      rec.loglik_history.push_back(ll_new);
      converged = (ll_new - ll) / (1.0 + std::fabs(ll_new)) < config.rel_tol;
      ll = ll_new;
      if (converged) break;
    }

    const bool degenerate =
        *std::min_element(params.tau.begin(), params.tau.end()) <
        degenerate_floor;
    rec.loglik = ll;
    rec.degenerate = degenerate;
    rec.converged = converged;
    if (diag) diag->restarts.push_back(std::move(rec));
    if (!degenerate && ll > best_loglik) {
      best_loglik = ll;
      best_params = params;
      found = true;
    }
  }
  if (!found)
    throw FitFailure("all " + std::to_string(n_restarts) +
                     " restarts degenerate for g=" + std::to_string(g));

  LcaModel model;
  model.g = g;
  model.vars = vars;
  model.n_rows = data.n_rows;
  model.n_params = lca_n_params(data, vars, g);

  // One final E-step on the winning parameters yields the posterior.
  model.loglik = detail::e_step(pt, best_params, g, resp);
  model.bic = 2.0 * model.loglik - model.n_params * std::log(n_total);
  model.tau = best_params.tau;
  model.theta.resize(g);
  for (int k = 0; k < g; ++k) {
    model.theta[k].resize(vars.size());
    const double* row =
        &best_params.theta[static_cast<std::size_t>(k) * pt.total_cats];
    for (std::size_t m = 0; m < vars.size(); ++m) {
      const int c = data.n_categories[vars[m]];
      model.theta[k][m].assign(row + pt.offset[m], row + pt.offset[m] + c);
    }
  }
  model.posterior.resize(static_cast<std::size_t>(data.n_rows) * g);
  model.z_hat.resize(data.n_rows);
  for (int n = 0; n < data.n_rows; ++n) {
    const int p = pt.row_pattern[n];
    const double* r = &resp[static_cast<std::size_t>(p) * g];
    const double w = pt.weight[p];
    double* dst = &model.posterior[static_cast<std::size_t>(n) * g];
    int arg = 0;
    for (int k = 0; k < g; ++k) {
      dst[k] = r[k] / w;
      if (dst[k] > dst[arg]) arg = k;
    }
    model.z_hat[n] = arg + 1;
  }
  return model;
}

// Fits g = 1..min(g_max, G*) and returns the BIC-maximizing model, ties
// broken toward smaller g. Degenerate fits at individual g are skipped;
// the failure propagates only if every g fails.
inline LcaModel best_lca_over_g(const CategoricalDataset& data,
                                std::span<const int> vars, int g_max,
                                const FitConfig& config) {
  if (vars.empty()) throw std::invalid_argument("empty variable set");
  std::vector<int> cats;
  for (int v : vars) cats.push_back(data.n_categories[v]);
  const int g_top = max_identifiable_g(cats, g_max);

  LcaModel best;
  bool found = false;
  std::string last_error;
  for (int g = 1; g <= g_top; ++g) {
    try {
      LcaModel m = fit_lca(data, vars, g, config);
      if (!found || m.bic > best.bic) {
        best = std::move(m);
        found = true;
      }
    } catch (const FitFailure& e) {
      last_error = e.what();
    }
  }
  if (!found) throw FitFailure("no g in 1.." + std::to_string(g_top) +
                               " produced a fit: " + last_error);
  return best;
}

// MAP partition; ties already resolved toward the smallest class index.
inline std::vector<int> classify(const LcaModel& model) {
  if (model.z_hat.empty()) throw std::invalid_argument("model not fitted");
  return model.z_hat;
}

}  // namespace lcasel
