#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcasel/lca.hpp"
#include "lcasel/metrics.hpp"
#include "lcasel/parallel.hpp"
#include "lcasel/selector.hpp"
#include "lcasel/simgen.hpp"

namespace lcasel {

// Simulation-study harness: per replicate, run the selection under the
// requested modes and score the classifications of the four reference
// model variants (all variables, true clustering variables, selection
// under the independence baseline, selection under the swap method).
struct ReplicationConfig {
  int scenario_id = 1;
  std::vector<int> n_list;
  int reps = 20;
  std::vector<SelectionMode> modes = {SelectionMode::kRedundancyAware,
                                      SelectionMode::kIndependenceBaseline};
  std::uint64_t seed = 0;
  int g_max = 5;
  FitConfig fit;
  bool swap_steps = true;
  int n_threads = 1;

  void validate() const {
    if (scenario_id != 1 && scenario_id != 2)
      throw std::invalid_argument("scenario_id must be 1 or 2");
    if (n_list.empty()) throw std::invalid_argument("empty n list");
    for (int n : n_list)
      if (n < 1) throw std::invalid_argument("sample sizes must be >= 1");
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (modes.empty()) throw std::invalid_argument("no selection modes");
    fit.validate();
  }
};

struct ReplicateResult {
  int n = 0;
  int rep = 0;
  std::map<SelectionMode, std::vector<int>> selected;    // sorted indices
  std::map<SelectionMode, int> g_selected;
  std::map<SelectionMode, double> ari_selected;
  double ari_all = 0.0;
  double ari_clus = 0.0;
  int g_all = 0;
  int g_clus = 0;
};

struct ReplicationReport {
  ReplicationConfig config;
  std::vector<int> true_clustering;  // from the scenario
  int n_vars = 0;
  std::vector<std::string> var_names;
  std::vector<ReplicateResult> results;  // ordered by (n, rep)
};

inline std::uint64_t replicate_seed(std::uint64_t seed, int n, int rep) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(n)),
                     static_cast<std::uint64_t>(rep));
}

inline ReplicationReport run_replication(const ReplicationConfig& config) {
  config.validate();
  ReplicationReport report;
  report.config = config;
  {
    ScenarioSpec probe{config.scenario_id, 1, 0};
    const SimulatedData sim = generate(probe);
    report.true_clustering = sim.true_roles.clustering;
    report.n_vars = sim.dataset.n_vars;
    report.var_names = sim.dataset.var_names;
  }

  struct Job { int n; int rep; };
  std::vector<Job> jobs;
  for (int n : config.n_list)
    for (int rep = 0; rep < config.reps; ++rep) jobs.push_back({n, rep});
  report.results.resize(jobs.size());

  parallel_for(static_cast<int>(jobs.size()), config.n_threads, [&](int i) {
    const Job job = jobs[i];
    const std::uint64_t rep_seed =
        replicate_seed(config.seed, job.n, job.rep);
    ScenarioSpec spec{config.scenario_id, job.n, rep_seed};
    const SimulatedData sim = generate(spec);

    FitConfig fit = config.fit;
    fit.seed = rep_seed;

    ReplicateResult res;
    res.n = job.n;
    res.rep = job.rep;
    for (SelectionMode mode : config.modes) {
      SelectorConfig sel;
      sel.g_max = config.g_max;
      sel.mode = mode;
      sel.swap_steps = config.swap_steps;
      sel.fit = fit;
      const SelectionTrace trace = select_variables(sim.dataset, sel);
      res.selected[mode] = trace.final_roles.clustering;
      res.g_selected[mode] = trace.final_model.g;
      res.ari_selected[mode] =
          ari(classify(trace.final_model), sim.true_labels);
    }
    std::vector<int> all_vars(sim.dataset.n_vars);
    for (int m = 0; m < sim.dataset.n_vars; ++m) all_vars[m] = m;
    const LcaModel model_all =
        best_lca_over_g(sim.dataset, all_vars, config.g_max, fit);
    res.ari_all = ari(classify(model_all), sim.true_labels);
    res.g_all = model_all.g;
    const LcaModel model_clus = best_lca_over_g(
        sim.dataset, sim.true_roles.clustering, config.g_max, fit);
    res.ari_clus = ari(classify(model_clus), sim.true_labels);
    res.g_clus = model_clus.g;
    report.results[i] = std::move(res);
  });
  return report;
}

// Fraction of replicates (at sample size n, under `mode`) in which each
// variable was declared a clustering variable.
inline std::vector<double> selection_frequency(const ReplicationReport& report,
                                               SelectionMode mode, int n) {
  std::vector<double> freq(report.n_vars, 0.0);
  int count = 0;
  for (const auto& res : report.results) {
    if (res.n != n) continue;
    auto it = res.selected.find(mode);
    if (it == res.selected.end()) continue;
    ++count;
    for (int v : it->second) freq[v] += 1.0;
  }
  if (count > 0)
    for (double& f : freq) f /= count;
  return freq;
}

// Distinct selected sets with multiplicities, most frequent first; ties
// broken lexicographically.
inline std::vector<std::pair<std::vector<int>, int>> selected_set_counts(
    const ReplicationReport& report, SelectionMode mode, int n) {
  std::map<std::vector<int>, int> counts;
  for (const auto& res : report.results) {
    if (res.n != n) continue;
    auto it = res.selected.find(mode);
    if (it != res.selected.end()) ++counts[it->second];
  }
  std::vector<std::pair<std::vector<int>, int>> out(counts.begin(),
                                                    counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

struct AriSummary {
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
  int count = 0;
};

inline AriSummary summarize(const std::vector<double>& values) {
  AriSummary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  s.min = values.front();
  s.max = values.front();
  for (double v : values) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / s.count;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = s.count > 1 ? std::sqrt(ss / (s.count - 1)) : 0.0;
  return s;
}

// ARI values of one model variant across replicates at sample size n.
// Variants: "all", "clus", "selInd", "selSwap".
inline std::vector<double> ari_values(const ReplicationReport& report,
                                      const std::string& variant, int n) {
  std::vector<double> out;
  for (const auto& res : report.results) {
    if (res.n != n) continue;
    if (variant == "all") {
      out.push_back(res.ari_all);
    } else if (variant == "clus") {
      out.push_back(res.ari_clus);
    } else if (variant == "selInd") {
      auto it = res.ari_selected.find(SelectionMode::kIndependenceBaseline);
      if (it != res.ari_selected.end()) out.push_back(it->second);
    } else if (variant == "selSwap") {
      auto it = res.ari_selected.find(SelectionMode::kRedundancyAware);
      if (it != res.ari_selected.end()) out.push_back(it->second);
    } else {
      throw std::invalid_argument("unknown variant: " + variant);
    }
  }
  return out;
}

}  // namespace lcasel
