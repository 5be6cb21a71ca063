#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcasel/assoc.hpp"
#include "lcasel/dataset.hpp"
#include "lcasel/lca.hpp"
#include "lcasel/selector.hpp"
#include "lcasel/simgen.hpp"

namespace lcasel {

using json = nlohmann::json;

inline std::string version_string() { return "0.1.0"; }

// FNV-1a 64-bit digest of a file's bytes, reported in run manifests so a
// rerun can assert it is looking at the same input.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

inline json model_to_json(const LcaModel& model,
                          const std::vector<std::string>& var_names) {
  json theta = json::array();
  for (int k = 0; k < model.g; ++k) {
    json per_var = json::object();
    for (std::size_t m = 0; m < model.vars.size(); ++m)
      per_var[var_names[model.vars[m]]] = model.theta[k][m];
    theta.push_back(per_var);
  }
  std::vector<std::string> names;
  for (int v : model.vars) names.push_back(var_names[v]);
  return json{{"g", model.g},         {"vars", names},
              {"tau", model.tau},     {"theta", theta},
              {"loglik", model.loglik}, {"bic", model.bic},
              {"n_params", model.n_params}};
}

inline json roles_to_json(const VariableRoles& roles,
                          const std::vector<std::string>& var_names) {
  std::vector<std::string> clus, other;
  for (int v : roles.clustering) clus.push_back(var_names[v]);
  for (int v : roles.other) other.push_back(var_names[v]);
  return json{{"clustering", clus}, {"other", other}};
}

inline json step_to_json(const SelectionStep& step,
                         const std::vector<std::string>& var_names) {
  json j{{"step", to_string(step.kind)},
         {"cycle", step.cycle},
         {"accepted", step.accepted}};
  j["candidate"] =
      step.candidate >= 0 ? json(var_names[step.candidate]) : json(nullptr);
  j["x_swap"] = step.x_swap >= 0 ? json(var_names[step.x_swap]) : json(nullptr);
  if (std::isfinite(step.bic_clus)) {
    j["bic_clus"] = step.bic_clus;
    j["bic_noclus"] = step.bic_noclus;
    j["bic_diff"] = step.bic_diff;
  } else {
    j["bic_clus"] = nullptr;
    j["bic_noclus"] = nullptr;
    j["bic_diff"] = nullptr;
  }
  j["g_chosen"] = step.g_chosen;
  std::vector<std::string> preds;
  for (int v : step.predictors) preds.push_back(var_names[v]);
  j["predictors"] = preds;
  if (!step.note.empty()) j["note"] = step.note;
  return j;
}

// JSON-lines trace: one object per step, then one summary object.
inline std::string trace_to_jsonl(const SelectionTrace& trace,
                                  const std::vector<std::string>& var_names) {
  std::ostringstream out;
  for (const auto& step : trace.steps)
    out << step_to_json(step, var_names).dump() << "\n";
  std::vector<std::string> selected;
  for (int v : trace.final_roles.clustering)
    selected.push_back(var_names[v]);
  json summary{{"summary", true},
               {"selected", selected},
               {"g", trace.final_model.g},
               {"bic", trace.final_model.bic},
               {"loglik", trace.final_model.loglik},
               {"cycles", trace.cycles},
               {"cycle_limit_hit", trace.cycle_limit_hit}};
  out << summary.dump() << "\n";
  return out.str();
}

inline std::string dataset_to_csv(const CategoricalDataset& data) {
  std::ostringstream out;
  for (int m = 0; m < data.n_vars; ++m)
    out << (m ? "," : "") << data.var_names[m];
  out << "\n";
  for (int n = 0; n < data.n_rows; ++n) {
    for (int m = 0; m < data.n_vars; ++m)
      out << (m ? "," : "") << data.level_names[m][data.code(n, m)];
    out << "\n";
  }
  return out.str();
}

inline json simulated_sidecar(const SimulatedData& sim,
                              const ScenarioSpec& spec) {
  const auto& names = sim.dataset.var_names;
  std::vector<std::string> redundant, noise;
  for (int v : sim.redundant_vars) redundant.push_back(names[v]);
  for (int v : sim.noise_vars) noise.push_back(names[v]);
  return json{{"scenario", spec.scenario_id},
              {"n", spec.n},
              {"seed", spec.seed},
              {"true_labels", sim.true_labels},
              {"roles", roles_to_json(sim.true_roles, names)},
              {"redundant", redundant},
              {"noise", noise}};
}

inline std::string association_to_csv(const AssociationMatrix& m,
                                      const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "variable";
  for (int c : m.selected) out << "," << names[c];
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < m.discarded.size(); ++i) {
    out << names[m.discarded[i]];
    for (std::size_t j = 0; j < m.selected.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", m.bic_diff_as[i][j]);
      out << "," << buf;
    }
    out << "\n";
  }
  return out.str();
}

inline json association_to_json(const AssociationMatrix& m,
                                const std::vector<std::string>& names) {
  std::vector<std::string> sel, dis;
  for (int v : m.selected) sel.push_back(names[v]);
  for (int v : m.discarded) dis.push_back(names[v]);
  return json{{"selected", sel},
              {"discarded", dis},
              {"bic_diff_as", m.bic_diff_as}};
}

// Reproducibility record written next to every command's outputs.
struct RunManifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  double wall_time_s = 0.0;

  json to_json() const {
    json ins = json::array();
    for (const auto& [path, digest] : inputs)
      ins.push_back({{"path", path}, {"digest_fnv1a64", digest}});
    return json{{"command", command},   {"version", version_string()},
                {"config", config},     {"seed", seed},
                {"inputs", ins},        {"wall_time_s", wall_time_s}};
  }
};

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace lcasel
