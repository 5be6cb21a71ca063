#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcasel/dataset.hpp"
#include "lcasel/lca.hpp"
#include "lcasel/logreg.hpp"
#include "lcasel/parallel.hpp"

namespace lcasel {

enum class SelectionMode { kRedundancyAware, kIndependenceBaseline };
enum class StepKind { kRemoval, kSwap1, kInclusion, kSwap2 };
enum class StepDirection { kRemove, kAdd };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::kRemoval: return "removal";
    case StepKind::kSwap1: return "swap1";
    case StepKind::kInclusion: return "inclusion";
    case StepKind::kSwap2: return "swap2";
  }
  return "?";
}

inline const char* to_string(SelectionMode m) {
  return m == SelectionMode::kRedundancyAware ? "swap" : "independence";
}

struct SelectorConfig {
  int g_max = 6;
  SelectionMode mode = SelectionMode::kRedundancyAware;
  bool swap_steps = true;
  FitConfig fit;
  bool cache_fits = true;
  int max_cycles = 50;
  int n_threads = 1;

  void validate() const {
    if (g_max < 2) throw std::invalid_argument("g_max must be >= 2");
    if (max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
    fit.validate();
  }
};

// One decision of the swap-stepwise search. candidate < 0 marks a step
// that could not be evaluated (empty side, swap steps disabled); the
// note says why. bic_diff = bic_clus - bic_noclus always.
struct SelectionStep {
  StepKind kind = StepKind::kRemoval;
  int cycle = 0;
  int candidate = -1;
  int x_swap = -1;
  double bic_clus = std::numeric_limits<double>::quiet_NaN();
  double bic_noclus = std::numeric_limits<double>::quiet_NaN();
  double bic_diff = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
  int g_chosen = 0;
  std::vector<int> predictors;
  std::string note;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  VariableRoles initial_roles;
  VariableRoles final_roles;
  LcaModel final_model;
  int cycles = 0;
  bool cycle_limit_hit = false;
};

struct BicDiffResult {
  double bic_clus = 0.0;
  double bic_noclus = 0.0;
  double bic_diff = 0.0;
  int g_chosen = 0;
  std::vector<int> predictors;
};

namespace detail {

struct LcaSummary {
  double bic = 0.0;
  double loglik = 0.0;
  int g = 0;
  bool failed = false;
};

struct RegSummary {
  double bic = 0.0;
  std::vector<int> predictors;
};

// Shared fit machinery for the selection search. Caches are keyed by the
// sorted variable sets alone; fit seeds derive from set content, so
// cached and uncached runs produce identical numbers.
class SelectorEngine {
 public:
  SelectorEngine(const CategoricalDataset& data, const SelectorConfig& config)
      : data_(data), config_(config) {}

  // max-over-G LCA BIC on a variable set (identifiability-capped).
  LcaSummary lca(const std::vector<int>& vars_sorted) {
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = lca_cache_.find(vars_sorted);
      if (it != lca_cache_.end()) return it->second;
    }
    LcaSummary s = compute_lca(vars_sorted);
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      lca_cache_.emplace(vars_sorted, s);
    }
    return s;
  }

  // Regression BIC of `response` given candidate predictors, with the
  // predictor subset chosen per mode: stepwise in redundancy-aware mode,
  // forced empty under the independence baseline.
  RegSummary regression(int response, const std::vector<int>& candidates) {
    const std::pair<int, std::vector<int>> key{response, candidates};
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = reg_cache_.find(key);
      if (it != reg_cache_.end()) return it->second;
    }
    RegSummary s;
    if (config_.mode == SelectionMode::kIndependenceBaseline ||
        candidates.empty()) {
      s.bic = multinom_bic(response, {});
    } else {
      auto [chosen, capped] = stepwise_predictor_search(
          candidates,
          [&](const std::vector<int>& preds) {
            return multinom_bic(response, preds);
          });
      (void)capped;
      s.bic = multinom_bic(response, chosen);
      s.predictors = std::move(chosen);
    }
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      reg_cache_.emplace(key, s);
    }
    return s;
  }

  // Single multinomial-fit BIC with a selection-wide memo; the stepwise
  // searches launched by different steps revisit the same subsets
  // constantly.
  double multinom_bic(int response, const std::vector<int>& predictors) {
    const std::pair<int, std::vector<int>> key{response, predictors};
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = reg_fit_cache_.find(key);
      if (it != reg_fit_cache_.end()) return it->second;
    }
    const double bic = fit_multinom(data_, response, predictors).bic;
    if (config_.cache_fits) {
      std::lock_guard<std::mutex> lock(mutex_);
      reg_fit_cache_.emplace(key, bic);
    }
    return bic;
  }

  const CategoricalDataset& data() const { return data_; }
  const SelectorConfig& config() const { return config_; }

 private:
  LcaSummary compute_lca(const std::vector<int>& vars) {
    LcaSummary s;
    try {
      LcaModel m = best_lca_over_g(data_, vars, config_.g_max, config_.fit);
      s.bic = m.bic;
      s.loglik = m.loglik;
      s.g = m.g;
    } catch (const FitFailure&) {
      s.failed = true;
      s.bic = -std::numeric_limits<double>::infinity();
    }
    return s;
  }

  const CategoricalDataset& data_;
  const SelectorConfig& config_;
  std::mutex mutex_;
  std::map<std::vector<int>, LcaSummary> lca_cache_;
  std::map<std::pair<int, std::vector<int>>, RegSummary> reg_cache_;
  std::map<std::pair<int, std::vector<int>>, double> reg_fit_cache_;
};

inline std::vector<int> without(const std::vector<int>& set, int v) {
  std::vector<int> out;
  out.reserve(set.size());
  for (int x : set)
    if (x != v) out.push_back(x);
  return out;
}

inline std::vector<int> with(const std::vector<int>& set, int v) {
  std::vector<int> out = set;
  out.insert(std::upper_bound(out.begin(), out.end(), v), v);
  return out;
}

// Evaluation of one candidate within a step: the competing-model BIC
// pieces plus the ingredients recorded in the trace.
struct CandidateEval {
  int var = -1;
  double bic_clus = 0.0;
  double bic_noclus = 0.0;
  double bic_diff = 0.0;
  int g_chosen = 0;
  std::vector<int> predictors;
  bool failed = false;
};

}  // namespace detail

// BIC difference between the clustering model M1 and the conditional-
// independence model M2 for one candidate variable, as used by the
// removal (direction=kRemove) and inclusion (direction=kAdd) steps.
inline BicDiffResult bic_diff_variable(const CategoricalDataset& data,
                                       const VariableRoles& roles,
                                       int candidate, StepDirection direction,
                                       const SelectorConfig& config) {
  config.validate();
  roles.validate(data.n_vars);
  std::vector<int> clustering = roles.clustering;
  std::sort(clustering.begin(), clustering.end());

  std::vector<int> base;
  if (direction == StepDirection::kRemove) {
    if (std::find(clustering.begin(), clustering.end(), candidate) ==
        clustering.end())
      throw std::invalid_argument("candidate not in the clustering set");
    if (clustering.size() < 2)
      throw std::invalid_argument("removal needs >= 2 clustering variables");
    base = detail::without(clustering, candidate);
  } else {
    if (std::find(roles.other.begin(), roles.other.end(), candidate) ==
        roles.other.end())
      throw std::invalid_argument("candidate not in the non-clustering set");
    base = clustering;
  }

  detail::SelectorEngine engine(data, config);
  const auto with_cand = detail::with(base, candidate);
  const auto m1 = engine.lca(with_cand);
  const auto m2_lca = engine.lca(base);
  if (m1.failed || m2_lca.failed) throw FitFailure("LCA fit failed");
  const auto reg = engine.regression(candidate, base);

  BicDiffResult out;
  out.bic_clus = m1.bic;
  out.bic_noclus = m2_lca.bic + reg.bic;
  out.bic_diff = out.bic_clus - out.bic_noclus;
  out.predictors = reg.predictors;
  // G of the would-be clustering set if the move were accepted.
  out.g_chosen = direction == StepDirection::kRemove ? m2_lca.g : m1.g;
  return out;
}

namespace detail {

class SwapStepwiseSearch {
 public:
  SwapStepwiseSearch(const CategoricalDataset& data,
                     const SelectorConfig& config)
      : engine_(data, config), config_(config) {}

  SelectionTrace run() {
    const int n_vars = engine_.data().n_vars;
    if (n_vars < 2)
      throw std::invalid_argument("need >= 2 variables for selection");
    clustering_.resize(n_vars);
    for (int m = 0; m < n_vars; ++m) clustering_[m] = m;
    other_.clear();

    SelectionTrace trace;
    trace.initial_roles = roles();

    // The search opens with one extra removal step, making the two
    // successive removal steps that precede the regular cycles.
    removal_step(trace, 0);

    double best_bic = -std::numeric_limits<double>::infinity();
    VariableRoles best_roles = roles();
    int cycle = 1;
    bool exhausted = false;
    for (; cycle <= config_.max_cycles; ++cycle) {
      bool changed = false;
      const auto removal = removal_step(trace, cycle);
      changed |= removal.accepted;
      changed |= swap1_step(trace, cycle, removal);
      const auto inclusion = inclusion_step(trace, cycle);
      changed |= inclusion.accepted;
      changed |= swap2_step(trace, cycle, inclusion);

      const auto current = engine_.lca(clustering_);
      if (!current.failed && current.bic > best_bic) {
        best_bic = current.bic;
        best_roles = roles();
      }
      if (!changed) { exhausted = true; break; }
    }
    trace.cycles = std::min(cycle, config_.max_cycles);
    if (!exhausted) {
      trace.cycle_limit_hit = true;
      clustering_ = best_roles.clustering;
      other_ = best_roles.other;
    }

    trace.final_roles = roles();
    trace.final_model = best_lca_over_g(engine_.data(), clustering_,
                                        config_.g_max, config_.fit);
    return trace;
  }

 private:
  struct StepOutcome {
    bool accepted = false;
    std::vector<int> ranking;  // candidates ordered by evidence
  };

  VariableRoles roles() const { return {clustering_, other_}; }

  void move_to_other(int v) {
    clustering_ = without(clustering_, v);
    other_ = with(other_, v);
  }
  void move_to_clustering(int v) {
    other_ = without(other_, v);
    clustering_ = with(clustering_, v);
  }

  // Evaluates all candidates of one step in parallel; the reduction is
  // deterministic because results are indexed by candidate position.
  std::vector<CandidateEval> evaluate(
      int n, const std::function<CandidateEval(int)>& eval_one) {
    std::vector<CandidateEval> out(n);
    parallel_for(n, config_.n_threads,
                 [&](int i) { out[i] = eval_one(i); });
    return out;
  }

  static SelectionStep skipped(StepKind kind, int cycle, std::string note) {
    SelectionStep s;
    s.kind = kind;
    s.cycle = cycle;
    s.note = std::move(note);
    return s;
  }

  // Removal: rank clustering variables by BIC_diff ascending, propose the
  // argmin, remove when BIC_diff < 0. A removal that would leave fewer
  // than two clustering variables is rejected.
  StepOutcome removal_step(SelectionTrace& trace, int cycle) {
    StepOutcome outcome;
    const auto clus = engine_.lca(clustering_);
    const auto cands = clustering_;
    auto evals = evaluate(static_cast<int>(cands.size()), [&](int i) {
      CandidateEval e;
      e.var = cands[i];
      const auto rest = without(cands, e.var);
      const auto lca_rest = engine_.lca(rest);
      const auto reg = engine_.regression(e.var, rest);
      e.failed = clus.failed || lca_rest.failed;
      e.bic_clus = clus.bic;
      e.bic_noclus = lca_rest.bic + reg.bic;
      e.bic_diff = e.failed ? std::numeric_limits<double>::infinity()
                            : e.bic_clus - e.bic_noclus;
      e.g_chosen = lca_rest.g;
      e.predictors = reg.predictors;
      return e;
    });
    std::stable_sort(evals.begin(), evals.end(),
                     [](const CandidateEval& a, const CandidateEval& b) {
                       if (a.bic_diff != b.bic_diff)
                         return a.bic_diff < b.bic_diff;
                       return a.var < b.var;
                     });
    for (const auto& e : evals) outcome.ranking.push_back(e.var);

    const auto& best = evals.front();
    SelectionStep step;
    step.kind = StepKind::kRemoval;
    step.cycle = cycle;
    step.candidate = best.var;
    step.bic_clus = best.bic_clus;
    step.bic_noclus = best.bic_noclus;
    step.bic_diff = best.bic_diff;
    step.g_chosen = best.g_chosen;
    step.predictors = best.predictors;
    if (best.failed) {
      step.note = "fit failure";
    } else if (best.bic_diff < 0.0) {
      if (clustering_.size() <= 2) {
        step.note = "rejected: clustering set at minimum size";
      } else {
        step.accepted = true;
      }
    }
    if (step.accepted) move_to_other(best.var);
    outcome.accepted = step.accepted;
    trace.steps.push_back(std::move(step));
    return outcome;
  }

  // Swap 1: try replacing one clustering variable (the weakest survivor
  // of the removal ranking) with each non-clustering variable; accept the
  // best exchange when its BIC_diff > 0.
  bool swap1_step(SelectionTrace& trace, int cycle,
                  const StepOutcome& removal) {
    if (!config_.swap_steps) {
      trace.steps.push_back(
          skipped(StepKind::kSwap1, cycle, "skipped: swap steps disabled"));
      return false;
    }
    if (other_.empty()) {
      trace.steps.push_back(
          skipped(StepKind::kSwap1, cycle, "skipped: no non-clustering variables"));
      return false;
    }
    const std::size_t pos = removal.accepted ? 1 : 0;
    if (removal.ranking.size() <= pos) {
      trace.steps.push_back(
          skipped(StepKind::kSwap1, cycle, "skipped: no swap variable"));
      return false;
    }
    const int x_swap = removal.ranking[pos];

    const auto clus = engine_.lca(clustering_);
    const auto cands = other_;
    auto evals = evaluate(static_cast<int>(cands.size()), [&](int i) {
      CandidateEval e;
      e.var = cands[i];
      const auto swapped = with(without(clustering_, x_swap), e.var);
      const auto lca_swapped = engine_.lca(swapped);
      const auto reg_out = engine_.regression(x_swap, swapped);
      const auto reg_in = engine_.regression(e.var, clustering_);
      e.failed = clus.failed || lca_swapped.failed;
      e.bic_clus = lca_swapped.bic + reg_out.bic;
      e.bic_noclus = clus.bic + reg_in.bic;
      e.bic_diff = e.failed ? -std::numeric_limits<double>::infinity()
                            : e.bic_clus - e.bic_noclus;
      e.g_chosen = lca_swapped.g;
      e.predictors = reg_out.predictors;
      return e;
    });
    const auto* best = &evals.front();
    for (const auto& e : evals)
      if (e.bic_diff > best->bic_diff ||
          (e.bic_diff == best->bic_diff && e.var < best->var))
        best = &e;

    SelectionStep step;
    step.kind = StepKind::kSwap1;
    step.cycle = cycle;
    step.candidate = best->var;
    step.x_swap = x_swap;
    step.bic_clus = best->bic_clus;
    step.bic_noclus = best->bic_noclus;
    step.bic_diff = best->bic_diff;
    step.g_chosen = best->g_chosen;
    step.predictors = best->predictors;
    if (best->failed) {
      step.note = "fit failure";
    } else if (best->bic_diff > 0.0) {
      step.accepted = true;
    }
    const bool accepted = step.accepted;
    if (accepted) {
      move_to_other(x_swap);
      move_to_clustering(best->var);
    }
    trace.steps.push_back(std::move(step));
    return accepted;
  }

  // Inclusion: rank non-clustering variables by BIC_diff descending,
  // propose the argmax, add when BIC_diff > 0.
  StepOutcome inclusion_step(SelectionTrace& trace, int cycle) {
    StepOutcome outcome;
    if (other_.empty()) {
      trace.steps.push_back(
          skipped(StepKind::kInclusion, cycle, "skipped: no non-clustering variables"));
      return outcome;
    }
    const auto clus = engine_.lca(clustering_);
    const auto cands = other_;
    auto evals = evaluate(static_cast<int>(cands.size()), [&](int i) {
      CandidateEval e;
      e.var = cands[i];
      const auto grown = with(clustering_, e.var);
      const auto lca_grown = engine_.lca(grown);
      const auto reg = engine_.regression(e.var, clustering_);
      e.failed = clus.failed || lca_grown.failed;
      e.bic_clus = lca_grown.bic;
      e.bic_noclus = clus.bic + reg.bic;
      e.bic_diff = e.failed ? -std::numeric_limits<double>::infinity()
                            : e.bic_clus - e.bic_noclus;
      e.g_chosen = lca_grown.g;
      e.predictors = reg.predictors;
      return e;
    });
    std::stable_sort(evals.begin(), evals.end(),
                     [](const CandidateEval& a, const CandidateEval& b) {
                       if (a.bic_diff != b.bic_diff)
                         return a.bic_diff > b.bic_diff;
                       return a.var < b.var;
                     });
    for (const auto& e : evals) outcome.ranking.push_back(e.var);

    const auto& best = evals.front();
    SelectionStep step;
    step.kind = StepKind::kInclusion;
    step.cycle = cycle;
    step.candidate = best.var;
    step.bic_clus = best.bic_clus;
    step.bic_noclus = best.bic_noclus;
    step.bic_diff = best.bic_diff;
    step.g_chosen = best.g_chosen;
    step.predictors = best.predictors;
    if (best.failed) {
      step.note = "fit failure";
    } else if (best.bic_diff > 0.0) {
      step.accepted = true;
    }
    if (step.accepted) move_to_clustering(best.var);
    outcome.accepted = step.accepted;
    trace.steps.push_back(std::move(step));
    return outcome;
  }

  // Swap 2: try replacing each clustering variable with the strongest
  // non-included variable of the inclusion ranking; accept the best
  // exchange when its BIC_diff < 0.
  bool swap2_step(SelectionTrace& trace, int cycle,
                  const StepOutcome& inclusion) {
    if (!config_.swap_steps) {
      trace.steps.push_back(
          skipped(StepKind::kSwap2, cycle, "skipped: swap steps disabled"));
      return false;
    }
    const std::size_t pos = inclusion.accepted ? 1 : 0;
    if (inclusion.ranking.size() <= pos) {
      trace.steps.push_back(
          skipped(StepKind::kSwap2, cycle, "skipped: no swap variable"));
      return false;
    }
    const int x_swap = inclusion.ranking[pos];

    const auto clus = engine_.lca(clustering_);
    const auto reg_swap = engine_.regression(x_swap, clustering_);
    const double bic_clus_const = clus.bic + reg_swap.bic;
    const auto cands = clustering_;
    auto evals = evaluate(static_cast<int>(cands.size()), [&](int i) {
      CandidateEval e;
      e.var = cands[i];
      const auto swapped = with(without(clustering_, e.var), x_swap);
      const auto lca_swapped = engine_.lca(swapped);
      const auto reg = engine_.regression(e.var, swapped);
      e.failed = clus.failed || lca_swapped.failed;
      e.bic_clus = bic_clus_const;
      e.bic_noclus = lca_swapped.bic + reg.bic;
      e.bic_diff = e.failed ? std::numeric_limits<double>::infinity()
                            : e.bic_clus - e.bic_noclus;
      e.g_chosen = lca_swapped.g;
      e.predictors = reg.predictors;
      return e;
    });
    const auto* best = &evals.front();
    for (const auto& e : evals)
      if (e.bic_diff < best->bic_diff ||
          (e.bic_diff == best->bic_diff && e.var < best->var))
        best = &e;

    SelectionStep step;
    step.kind = StepKind::kSwap2;
    step.cycle = cycle;
    step.candidate = best->var;
    step.x_swap = x_swap;
    step.bic_clus = best->bic_clus;
    step.bic_noclus = best->bic_noclus;
    step.bic_diff = best->bic_diff;
    step.g_chosen = best->g_chosen;
    step.predictors = best->predictors;
    if (best->failed) {
      step.note = "fit failure";
    } else if (best->bic_diff < 0.0) {
      step.accepted = true;
    }
    const bool accepted = step.accepted;
    if (accepted) {
      move_to_other(best->var);
      move_to_clustering(x_swap);
    }
    trace.steps.push_back(std::move(step));
    return accepted;
  }

  SelectorEngine engine_;
  const SelectorConfig& config_;
  std::vector<int> clustering_;  // ascending
  std::vector<int> other_;       // ascending
};

}  // namespace detail

// Swap-stepwise variable selection: starting from all variables in the
// clustering set, alternate removal, swap, inclusion, swap moves until a
// full cycle changes nothing.
inline SelectionTrace select_variables(const CategoricalDataset& data,
                                       const SelectorConfig& config) {
  config.validate();
  detail::SwapStepwiseSearch search(data, config);
  return search.run();
}

}  // namespace lcasel
