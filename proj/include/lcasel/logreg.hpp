#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lcasel/dataset.hpp"

namespace lcasel {

struct RegConfig {
  int max_iter = 100;
  double grad_tol = 1e-8;
  double step_tol = 1e-6;
  double max_step = 30.0;  // per-iteration clamp on coefficient moves
};

// Multinomial logistic fit of one categorical variable on dummy-coded
// categorical predictors, softmax link, first response category as
// reference. converged=false means the iteration cap was hit, which is
// the expected outcome under separation; the attained log-likelihood is
// still the valid finite maximum for BIC purposes.
struct LogRegModel {
  int response = -1;
  std::vector<int> predictors;  // ascending
  std::vector<std::vector<double>> coefficients;  // per non-ref category
  double loglik = 0.0;
  double bic = 0.0;
  int n_params = 0;
  bool converged = true;
  bool search_capped = false;  // stepwise pass cap hit (select_predictors)
};

namespace detail {

// Distinct predictor-level cells with per-response-category counts.
// The likelihood depends on the data only through these counts.
struct RegCells {
  int n_cells = 0;
  int n_resp_cats = 0;
  int dim = 0;                    // 1 + sum (C_r - 1)
  std::vector<int> nz;            // n_cells x (1+n_preds) design indices
  int nz_per_cell = 0;
  std::vector<double> counts;     // n_cells x n_resp_cats
  std::vector<double> cell_total;
};

inline RegCells build_reg_cells(const CategoricalDataset& data, int response,
                                std::span<const int> predictors) {
  RegCells rc;
  rc.n_resp_cats = data.n_categories[response];
  rc.dim = 1;
  std::vector<int> col_base(predictors.size());
  for (std::size_t k = 0; k < predictors.size(); ++k) {
    col_base[k] = rc.dim;
    rc.dim += data.n_categories[predictors[k]] - 1;
  }
  rc.nz_per_cell = 1 + static_cast<int>(predictors.size());

  // Predictor patterns fit in a radix key at desk scale (checked below);
  // the tree-map fallback covers arbitrarily wide joint spaces.
  unsigned long long space = 1;
  bool radix = true;
  for (int p : predictors) {
    const auto c = static_cast<unsigned long long>(data.n_categories[p]);
    if (space > (1ULL << 62) / c) { radix = false; break; }
    space *= c;
  }

  std::vector<int> key(predictors.size());
  auto add_cell = [&]() {
    ++rc.n_cells;
    rc.nz.push_back(0);  // intercept column
    for (std::size_t k = 0; k < predictors.size(); ++k)
      // level 0 is the reference level: -1 marks "no dummy column"
      rc.nz.push_back(key[k] == 0 ? -1 : col_base[k] + key[k] - 1);
    rc.counts.resize(static_cast<std::size_t>(rc.n_cells) * rc.n_resp_cats,
                     0.0);
    rc.cell_total.push_back(0.0);
  };
  std::unordered_map<unsigned long long, int> seen_radix;
  std::map<std::vector<int>, int> seen_tree;
  if (radix) seen_radix.reserve(static_cast<std::size_t>(data.n_rows) * 2);
  for (int n = 0; n < data.n_rows; ++n) {
    int j;
    if (radix) {
      unsigned long long rkey = 0;
      for (std::size_t k = 0; k < predictors.size(); ++k) {
        key[k] = data.code(n, predictors[k]);
        rkey = rkey * static_cast<unsigned long long>(
                          data.n_categories[predictors[k]]) +
               static_cast<unsigned long long>(key[k]);
      }
      auto [it, inserted] = seen_radix.try_emplace(rkey, rc.n_cells);
      if (inserted) add_cell();
      j = it->second;
    } else {
      for (std::size_t k = 0; k < predictors.size(); ++k)
        key[k] = data.code(n, predictors[k]);
      auto [it, inserted] = seen_tree.try_emplace(key, rc.n_cells);
      if (inserted) add_cell();
      j = it->second;
    }
    rc.counts[static_cast<std::size_t>(j) * rc.n_resp_cats +
              data.code(n, response)] += 1.0;
    rc.cell_total[j] += 1.0;
  }
  return rc;
}

}  // namespace detail

inline int logreg_n_params(const CategoricalDataset& data, int response,
                           std::span<const int> predictors) {
  int d = 1;
  for (int p : predictors) d += data.n_categories[p] - 1;
  return (data.n_categories[response] - 1) * d;
}

// Maximizes the softmax regression likelihood by Newton ascent with
// step-halving. Monotone in the log-likelihood by construction. No
// penalty is applied; separation simply leaves converged=false at the cap.
inline LogRegModel fit_multinom(const CategoricalDataset& data, int response,
                                std::span<const int> predictors_in,
                                const RegConfig& config = {}) {
  if (response < 0 || response >= data.n_vars)
    throw std::invalid_argument("response index out of range");
  std::vector<int> predictors(predictors_in.begin(), predictors_in.end());
  std::sort(predictors.begin(), predictors.end());
  predictors.erase(std::unique(predictors.begin(), predictors.end()),
                   predictors.end());
  for (int p : predictors) {
    if (p < 0 || p >= data.n_vars)
      throw std::invalid_argument("predictor index out of range");
    if (p == response)
      throw std::invalid_argument("response cannot be its own predictor");
  }

  LogRegModel model;
  model.response = response;
  model.predictors = predictors;
  model.n_params = logreg_n_params(data, response, predictors);
  const double n_total = static_cast<double>(data.n_rows);

  const int cy = data.n_categories[response];
  if (predictors.empty()) {
    // Intercept-only model in closed form.
    std::vector<double> cnt(cy, 0.0);
    for (int n = 0; n < data.n_rows; ++n) cnt[data.code(n, response)] += 1.0;
    double ll = 0.0;
    for (double c : cnt)
      if (c > 0) ll += c * std::log(c / n_total);
    model.loglik = ll;
    model.bic = 2.0 * ll - model.n_params * std::log(n_total);
    model.coefficients.assign(cy - 1, std::vector<double>(1, 0.0));
    const double ref = std::max(cnt[0], 0.5);  // observed levels imply > 0
    for (int c = 1; c < cy; ++c)
      model.coefficients[c - 1][0] =
          std::log(std::max(cnt[c], 1e-300) / ref);
    model.converged = true;
    return model;
  }

  const auto rc = detail::build_reg_cells(data, response, predictors);
  const int k_cls = cy - 1;
  const int d = rc.dim;
  const int n_par = k_cls * d;

  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(k_cls, d);
  Eigen::MatrixXd eta(rc.n_cells, k_cls);
  Eigen::MatrixXd pi(rc.n_cells, k_cls);
  std::vector<double> log_z(rc.n_cells);

  auto linear_predictor = [&](const Eigen::MatrixXd& b, Eigen::MatrixXd& e) {
    for (int j = 0; j < rc.n_cells; ++j) {
      const int* nzj = &rc.nz[static_cast<std::size_t>(j) * rc.nz_per_cell];
      for (int c = 0; c < k_cls; ++c) {
        double v = 0.0;
        for (int q = 0; q < rc.nz_per_cell; ++q)
          if (nzj[q] >= 0) v += b(c, nzj[q]);
        e(j, c) = v;
      }
    }
  };
  // log(1 + sum exp(eta_c)) via the max trick; exact in the saturated
  // limit where one eta dominates.
  auto loglik_of = [&](const Eigen::MatrixXd& e, std::vector<double>& lz) {
    double ll = 0.0;
    for (int j = 0; j < rc.n_cells; ++j) {
      double mx = 0.0;
      for (int c = 0; c < k_cls; ++c) mx = std::max(mx, e(j, c));
      double z = std::exp(-mx);
      for (int c = 0; c < k_cls; ++c) z += std::exp(e(j, c) - mx);
      lz[j] = mx + std::log(z);
      const double* cnt =
          &rc.counts[static_cast<std::size_t>(j) * rc.n_resp_cats];
      double v = -rc.cell_total[j] * lz[j];
      for (int c = 0; c < k_cls; ++c) v += cnt[c + 1] * e(j, c);
      ll += v;
    }
    return ll;
  };

  linear_predictor(beta, eta);
  double ll = loglik_of(eta, log_z);

  Eigen::VectorXd grad(n_par);
  Eigen::MatrixXd hess(n_par, n_par);
  Eigen::MatrixXd beta_new(k_cls, d);
  Eigen::MatrixXd eta_new(rc.n_cells, k_cls);
  std::vector<double> log_z_new(rc.n_cells);
  model.converged = false;

  for (int iter = 0; iter < config.max_iter; ++iter) {
    for (int j = 0; j < rc.n_cells; ++j)
      for (int c = 0; c < k_cls; ++c)
        pi(j, c) = std::exp(eta(j, c) - log_z[j]);

    grad.setZero();
    hess.setZero();
    for (int j = 0; j < rc.n_cells; ++j) {
      const int* nzj = &rc.nz[static_cast<std::size_t>(j) * rc.nz_per_cell];
      const double* cnt =
          &rc.counts[static_cast<std::size_t>(j) * rc.n_resp_cats];
      const double nj = rc.cell_total[j];
      for (int c = 0; c < k_cls; ++c) {
        const double gc = cnt[c + 1] - nj * pi(j, c);
        for (int q = 0; q < rc.nz_per_cell; ++q)
          if (nzj[q] >= 0) grad[c * d + nzj[q]] += gc;
        for (int c2 = 0; c2 < k_cls; ++c2) {
          const double w =
              nj * pi(j, c) * ((c == c2 ? 1.0 : 0.0) - pi(j, c2));
          if (w == 0.0) continue;
          for (int q = 0; q < rc.nz_per_cell; ++q) {
            if (nzj[q] < 0) continue;
            for (int q2 = 0; q2 < rc.nz_per_cell; ++q2)
              if (nzj[q2] >= 0) hess(c * d + nzj[q], c2 * d + nzj[q2]) += w;
          }
        }
      }
    }

    // Newton direction; a tiny ridge keeps the solve defined when the
    // expected information degenerates (separation, collinear dummies).
    // The ridge is relative to the Hessian scale so that vanishing
    // curvature under separation still yields natural unit-scale steps.
    const double ridge =
        1e-10 * std::max(hess.diagonal().maxCoeff(), 1e-300);
    hess.diagonal().array() += ridge;
    Eigen::VectorXd delta = hess.ldlt().solve(grad);
    if (!delta.allFinite()) break;
    const double dmax = delta.cwiseAbs().maxCoeff();
    if (dmax > config.max_step) delta *= config.max_step / dmax;

    double step = 1.0;
    double ll_new = ll;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      for (int c = 0; c < k_cls; ++c)
        for (int col = 0; col < d; ++col)
          beta_new(c, col) = beta(c, col) + step * delta[c * d + col];
      linear_predictor(beta_new, eta_new);
      ll_new = loglik_of(eta_new, log_z_new);
      if (ll_new >= ll) { improved = true; break; }
      step *= 0.5;
    }
    if (!improved) {
      model.converged = grad.cwiseAbs().maxCoeff() < config.grad_tol;
      break;
    }
    beta = beta_new;
    eta.swap(eta_new);
    log_z.swap(log_z_new);
    ll = ll_new;
    if ((grad.cwiseAbs().maxCoeff() < config.grad_tol &&
         step * dmax < config.step_tol) ||
        dmax == 0.0) {
      model.converged = true;
      break;
    }
  }
  // Separation sends coefficients to infinity; once the fitted
  // probabilities saturate in floating point the gradient underflows,
  // but the maximum is a boundary supremum, not an interior optimum.
  if (eta.cwiseAbs().maxCoeff() > 25.0) model.converged = false;

  model.loglik = ll;
  model.bic = 2.0 * ll - model.n_params * std::log(n_total);
  model.coefficients.assign(k_cls, std::vector<double>(d));
  for (int c = 0; c < k_cls; ++c)
    for (int col = 0; col < d; ++col)
      model.coefficients[c][col] = beta(c, col);
  return model;
}

// Backward stepwise search over predictor subsets: start from the full
// candidate set, run one extra removal step, then alternate removal and
// inclusion until a full pass changes nothing. Removal drops the
// BIC-difference argmin when it is <= 0; inclusion adds the argmax when
// it is > 0. Returns (chosen subset, pass-cap-hit flag). bic_of receives
// a sorted predictor subset.
template <class BicFn>
std::pair<std::vector<int>, bool> stepwise_predictor_search(
    const std::vector<int>& candidates, BicFn&& bic_of) {
  std::vector<int> current = candidates;

  auto removal = [&]() {
    if (current.empty()) return false;
    const double bic_full = bic_of(current);
    double best_diff = 0.0;
    int best_var = -1;
    for (int j : current) {
      std::vector<int> rest;
      for (int v : current)
        if (v != j) rest.push_back(v);
      const double diff = bic_full - bic_of(rest);
      if (best_var < 0 || diff < best_diff) {
        best_diff = diff;
        best_var = j;
      }
    }
    if (best_var >= 0 && best_diff <= 0.0) {
      current.erase(std::find(current.begin(), current.end(), best_var));
      return true;
    }
    return false;
  };
  auto inclusion = [&]() {
    std::vector<int> outside;
    for (int v : candidates)
      if (std::find(current.begin(), current.end(), v) == current.end())
        outside.push_back(v);
    if (outside.empty()) return false;
    const double bic_cur = bic_of(current);
    double best_diff = 0.0;
    int best_var = -1;
    for (int k : outside) {
      std::vector<int> grown = current;
      grown.insert(std::upper_bound(grown.begin(), grown.end(), k), k);
      const double diff = bic_of(grown) - bic_cur;
      if (best_var < 0 || diff > best_diff) {
        best_diff = diff;
        best_var = k;
      }
    }
    if (best_var >= 0 && best_diff > 0.0) {
      current.insert(std::upper_bound(current.begin(), current.end(),
                                      best_var),
                     best_var);
      return true;
    }
    return false;
  };

  bool capped = false;
  removal();  // the extra leading removal step
  const int max_passes = 2 * std::max<int>(1, static_cast<int>(candidates.size()));
  int pass = 0;
  for (; pass < max_passes; ++pass) {
    const bool r = removal();
    const bool i = inclusion();
    if (!r && !i) break;
  }
  if (pass == max_passes) capped = true;
  return {current, capped};
}

// Backward stepwise predictor selection for the regression of `response`
// on a subset of `candidates`; the empty set is a legal result.
inline LogRegModel select_predictors(const CategoricalDataset& data,
                                     int response,
                                     std::span<const int> candidates_in,
                                     const RegConfig& config = {}) {
  std::vector<int> candidates(candidates_in.begin(), candidates_in.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  for (int p : candidates)
    if (p == response)
      throw std::invalid_argument("response cannot be a candidate predictor");

  std::map<std::vector<int>, double> bic_memo;
  auto bic_of = [&](const std::vector<int>& preds) {
    auto it = bic_memo.find(preds);
    if (it != bic_memo.end()) return it->second;
    const double b = fit_multinom(data, response, preds, config).bic;
    bic_memo.emplace(preds, b);
    return b;
  };
  auto [chosen, capped] = stepwise_predictor_search(candidates, bic_of);

  LogRegModel model = fit_multinom(data, response, chosen, config);
  model.search_capped = capped;
  return model;
}

}  // namespace lcasel
