// Command-line interface: model fitting, variable selection, scenario
// simulation, association screening and the replication harness.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lcasel/lcasel.hpp"

namespace fs = std::filesystem;
using lcasel::json;

namespace {

struct CommonArgs {
  std::string out_dir = ".";
  std::uint64_t seed = 0;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> parse_var_names(const lcasel::CategoricalDataset& data,
                                 const std::string& list) {
  std::vector<int> out;
  for (const auto& name : split_list(list))
    out.push_back(data.var_index(name));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file: " + path);
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    in >> j;
    if (j.contains("true_labels"))
      return j["true_labels"].get<std::vector<int>>();
    return j.get<std::vector<int>>();
  }
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  if (labels.empty()) throw std::runtime_error("empty labels file: " + path);
  return labels;
}

void write_manifest(const std::string& out_dir, const std::string& name,
                    lcasel::RunManifest manifest,
                    const lcasel::WallClock& clock) {
  manifest.wall_time_s = clock.seconds();
  lcasel::write_text_file(out_dir + "/" + name + "_manifest.json",
                          manifest.to_json().dump(2) + "\n");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

int cmd_fit(const std::string& input, int g_min, int g_max, int restarts,
            std::uint64_t seed, const std::string& vars_list,
            const std::string& labels_path, const std::string& out_dir,
            bool no_header) {
  lcasel::WallClock clock;
  lcasel::CsvOptions opts;
  opts.header = !no_header;
  const auto data = lcasel::load_csv(input, opts);

  std::vector<int> vars;
  if (vars_list.empty()) {
    vars.resize(data.n_vars);
    for (int m = 0; m < data.n_vars; ++m) vars[m] = m;
  } else {
    vars = parse_var_names(data, vars_list);
  }
  if (vars.empty()) throw std::runtime_error("no variables selected");

  std::vector<int> cats;
  for (int v : vars) cats.push_back(data.n_categories[v]);
  const int g_top = lcasel::max_identifiable_g(cats, g_max);
  if (g_min > g_top)
    throw std::runtime_error("--g-min " + std::to_string(g_min) +
                             " exceeds the identifiable cap " +
                             std::to_string(g_top));

  lcasel::FitConfig fit;
  fit.n_restarts = restarts;
  fit.seed = seed;
  lcasel::LcaModel best;
  bool found = false;
  for (int g = g_min; g <= g_top; ++g) {
    try {
      lcasel::LcaModel m = lcasel::fit_lca(data, vars, g, fit);
      if (!found || m.bic > best.bic) {
        best = std::move(m);
        found = true;
      }
    } catch (const lcasel::FitFailure&) {
    }
  }
  if (!found) throw lcasel::FitFailure("no g in the requested range fit");

  fs::create_directories(out_dir);
  lcasel::write_text_file(
      out_dir + "/model.json",
      lcasel::model_to_json(best, data.var_names).dump(2) + "\n");

  std::ostringstream line;
  line << "g=" << best.g << " bic=" << fmt(best.bic)
       << " loglik=" << fmt(best.loglik) << " n_params=" << best.n_params;
  if (!labels_path.empty()) {
    const auto labels = load_labels(labels_path);
    line << " ari=" << fmt(lcasel::ari(lcasel::classify(best), labels));
  }
  std::cout << line.str() << "\n";

  lcasel::RunManifest manifest;
  manifest.command = "fit";
  manifest.seed = seed;
  manifest.config = {{"g_min", g_min},   {"g_max", g_max},
                     {"restarts", restarts}, {"vars", vars_list},
                     {"header", !no_header}};
  manifest.inputs.emplace_back(input, lcasel::file_digest(input));
  write_manifest(out_dir, "fit", manifest, clock);
  return 0;
}

int cmd_select(const std::string& input, const std::string& mode_name,
               bool no_swap_steps, int g_max, int restarts,
               std::uint64_t seed, std::string trace_path,
               const std::string& out_dir, int threads, bool no_header) {
  lcasel::WallClock clock;
  lcasel::CsvOptions opts;
  opts.header = !no_header;
  const auto data = lcasel::load_csv(input, opts);
  if (data.n_vars < 2) throw std::runtime_error("need >= 2 variables");

  lcasel::SelectorConfig config;
  config.g_max = g_max;
  config.mode = mode_name == "independence"
                    ? lcasel::SelectionMode::kIndependenceBaseline
                    : lcasel::SelectionMode::kRedundancyAware;
  config.swap_steps = !no_swap_steps;
  config.fit.n_restarts = restarts;
  config.fit.seed = seed;
  config.n_threads = threads;

  const auto trace = lcasel::select_variables(data, config);

  fs::create_directories(out_dir);
  if (trace_path.empty()) trace_path = out_dir + "/trace.jsonl";
  lcasel::write_text_file(trace_path,
                          lcasel::trace_to_jsonl(trace, data.var_names));
  lcasel::write_text_file(
      out_dir + "/model.json",
      lcasel::model_to_json(trace.final_model, data.var_names).dump(2) +
          "\n");
  lcasel::write_text_file(
      out_dir + "/roles.json",
      lcasel::roles_to_json(trace.final_roles, data.var_names).dump(2) +
          "\n");

  std::ostringstream names;
  for (int v : trace.final_roles.clustering)
    names << (names.tellp() > 0 ? " " : "") << data.var_names[v];
  std::cout << "selected: " << names.str() << "\n"
            << "g=" << trace.final_model.g
            << " bic=" << fmt(trace.final_model.bic) << "\n";

  lcasel::RunManifest manifest;
  manifest.command = "select";
  manifest.seed = seed;
  manifest.config = {{"mode", mode_name},
                     {"swap_steps", !no_swap_steps},
                     {"g_max", g_max},
                     {"restarts", restarts},
                     {"threads", threads},
                     {"header", !no_header},
                     {"trace", trace_path}};
  manifest.inputs.emplace_back(input, lcasel::file_digest(input));
  write_manifest(out_dir, "select", manifest, clock);
  return 0;
}

int cmd_simulate(int scenario, int n, int reps, std::uint64_t seed,
                 const std::string& out_dir) {
  lcasel::WallClock clock;
  if (reps < 1) throw std::runtime_error("--reps must be >= 1");
  fs::create_directories(out_dir);
  for (int rep = 1; rep <= reps; ++rep) {
    lcasel::ScenarioSpec spec;
    spec.scenario_id = scenario;
    spec.n = n;
    spec.seed = lcasel::derive_seed(seed, static_cast<std::uint64_t>(rep));
    const auto sim = lcasel::generate(spec);
    const std::string stem = out_dir + "/scenario" + std::to_string(scenario) +
                             "_rep" + std::to_string(rep);
    lcasel::write_text_file(stem + ".csv",
                            lcasel::dataset_to_csv(sim.dataset));
    lcasel::write_text_file(stem + "_labels.json",
                            lcasel::simulated_sidecar(sim, spec).dump(2) +
                                "\n");
    std::cout << stem << ".csv n=" << n << "\n";
  }
  lcasel::RunManifest manifest;
  manifest.command = "simulate";
  manifest.seed = seed;
  manifest.config = {{"scenario", scenario}, {"n", n}, {"reps", reps}};
  write_manifest(out_dir, "simulate", manifest, clock);
  return 0;
}

int cmd_associate(const std::string& input, const std::string& clustering,
                  const std::string& discarded, const std::string& out_dir,
                  bool no_header) {
  lcasel::WallClock clock;
  lcasel::CsvOptions opts;
  opts.header = !no_header;
  const auto data = lcasel::load_csv(input, opts);

  lcasel::VariableRoles roles;
  roles.clustering = parse_var_names(data, clustering);
  roles.other = parse_var_names(data, discarded);
  if (roles.clustering.empty() || roles.other.empty())
    throw std::runtime_error("both role sets must be non-empty");

  const auto matrix = lcasel::association_screen(data, roles);
  fs::create_directories(out_dir);
  lcasel::write_text_file(out_dir + "/association.csv",
                          lcasel::association_to_csv(matrix, data.var_names));
  lcasel::write_text_file(
      out_dir + "/association.json",
      lcasel::association_to_json(matrix, data.var_names).dump(2) + "\n");
  std::cout << "association matrix: " << matrix.discarded.size() << " x "
            << matrix.selected.size() << "\n";

  lcasel::RunManifest manifest;
  manifest.command = "associate";
  manifest.config = {{"clustering", clustering}, {"discarded", discarded}};
  manifest.inputs.emplace_back(input, lcasel::file_digest(input));
  write_manifest(out_dir, "associate", manifest, clock);
  return 0;
}

int cmd_replicate(int scenario, const std::string& n_list_str, int reps,
                  const std::string& modes_str, std::uint64_t seed, int g_max,
                  int restarts, int threads, const std::string& out_dir) {
  lcasel::WallClock clock;
  lcasel::ReplicationConfig config;
  config.scenario_id = scenario;
  for (const auto& tok : split_list(n_list_str))
    config.n_list.push_back(std::stoi(tok));
  config.reps = reps;
  config.modes.clear();
  for (const auto& tok : split_list(modes_str)) {
    if (tok == "swap")
      config.modes.push_back(lcasel::SelectionMode::kRedundancyAware);
    else if (tok == "independence")
      config.modes.push_back(lcasel::SelectionMode::kIndependenceBaseline);
    else
      throw std::runtime_error("unknown mode: " + tok);
  }
  config.seed = seed;
  config.g_max = g_max;
  config.fit.n_restarts = restarts;
  config.n_threads = threads;
  config.validate();

  const auto report = lcasel::run_replication(config);
  fs::create_directories(out_dir);

  const auto& names = report.var_names;
  std::ostringstream freq_csv, sets_csv, ari_csv, summary_csv;
  freq_csv << "scenario,n,mode,variable,frequency\n";
  sets_csv << "scenario,n,mode,rank,count,frequency,set\n";
  ari_csv << "scenario,n,rep,variant,ari\n";
  summary_csv << "scenario,n,variant,count,mean_ari,sd_ari,min_ari,max_ari\n";

  for (int n : config.n_list) {
    for (auto mode : config.modes) {
      const auto freq = lcasel::selection_frequency(report, mode, n);
      for (int v = 0; v < report.n_vars; ++v)
        freq_csv << scenario << "," << n << "," << to_string(mode) << ","
                 << names[v] << "," << fmt(freq[v]) << "\n";
      const auto sets = lcasel::selected_set_counts(report, mode, n);
      const int total = config.reps;
      for (std::size_t r = 0; r < sets.size(); ++r) {
        std::string set_names;
        for (int v : sets[r].first)
          set_names += (set_names.empty() ? "" : "+") + names[v];
        sets_csv << scenario << "," << n << "," << to_string(mode) << ","
                 << (r + 1) << "," << sets[r].second << ","
                 << fmt(double(sets[r].second) / total) << "," << set_names
                 << "\n";
      }
    }
    for (const auto& variant : {"all", "clus", "selInd", "selSwap"}) {
      const auto values = lcasel::ari_values(report, variant, n);
      if (values.empty()) continue;
      const auto s = lcasel::summarize(values);
      summary_csv << scenario << "," << n << "," << variant << "," << s.count
                  << "," << fmt(s.mean) << "," << fmt(s.sd) << ","
                  << fmt(s.min) << "," << fmt(s.max) << "\n";
    }
  }
  for (const auto& res : report.results) {
    auto emit = [&](const std::string& variant, double v) {
      ari_csv << scenario << "," << res.n << "," << res.rep << "," << variant
              << "," << fmt(v) << "\n";
    };
    emit("all", res.ari_all);
    emit("clus", res.ari_clus);
    auto ind = res.ari_selected.find(lcasel::SelectionMode::kIndependenceBaseline);
    if (ind != res.ari_selected.end()) emit("selInd", ind->second);
    auto swp = res.ari_selected.find(lcasel::SelectionMode::kRedundancyAware);
    if (swp != res.ari_selected.end()) emit("selSwap", swp->second);
  }

  lcasel::write_text_file(out_dir + "/selection_frequency.csv",
                          freq_csv.str());
  lcasel::write_text_file(out_dir + "/selected_sets.csv", sets_csv.str());
  lcasel::write_text_file(out_dir + "/ari_replicates.csv", ari_csv.str());
  lcasel::write_text_file(out_dir + "/ari_summary.csv", summary_csv.str());
  std::cout << "replication report written to " << out_dir << "\n";

  lcasel::RunManifest manifest;
  manifest.command = "replicate";
  manifest.seed = seed;
  manifest.config = {{"scenario", scenario}, {"n_list", n_list_str},
                     {"reps", reps},         {"modes", modes_str},
                     {"g_max", g_max},       {"restarts", restarts},
                     {"threads", threads}};
  write_manifest(out_dir, "replicate", manifest, clock);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent class clustering with swap-stepwise variable "
               "selection for categorical data"};
  app.require_subcommand(1);

  std::string input, vars_list, labels_path, out_dir = ".";
  std::string mode = "swap", trace_path, clustering, discarded;
  std::string n_list = "1000", modes = "swap,independence";
  int g_min = 1, g_max = 6, restarts = 10, scenario = 1, n = 1000, reps = 1;
  int threads = lcasel::default_threads();
  std::uint64_t seed = 0;
  bool no_swap_steps = false, no_header = false;

  auto* fit = app.add_subcommand("fit", "Fit a latent class model");
  fit->add_option("input", input, "CSV file")->required();
  fit->add_option("--g-min", g_min, "smallest number of classes");
  fit->add_option("--g-max", g_max, "largest number of classes");
  fit->add_option("--restarts", restarts, "EM restarts");
  fit->add_option("--seed", seed, "RNG seed");
  fit->add_option("--vars", vars_list, "comma-separated variable names");
  fit->add_option("--labels", labels_path, "reference labels for ARI");
  fit->add_option("--out-dir", out_dir, "output directory");
  fit->add_flag("--no-header", no_header, "CSV has no header row");

  auto* select = app.add_subcommand("select", "Swap-stepwise variable selection");
  select->add_option("input", input, "CSV file")->required();
  select->add_option("--mode", mode, "swap | independence")
      ->check(CLI::IsMember({"swap", "independence"}));
  select->add_flag("--no-swap-steps", no_swap_steps, "disable swap steps");
  select->add_option("--g-max", g_max, "largest number of classes");
  select->add_option("--restarts", restarts, "EM restarts");
  select->add_option("--seed", seed, "RNG seed");
  select->add_option("--trace", trace_path, "trace output (JSON lines)");
  select->add_option("--threads", threads, "parallel candidate evaluations");
  select->add_option("--out-dir", out_dir, "output directory");
  select->add_flag("--no-header", no_header, "CSV has no header row");

  auto* simulate = app.add_subcommand("simulate", "Generate scenario data");
  simulate->add_option("--scenario", scenario, "1 or 2")->required();
  simulate->add_option("--n", n, "sample size")->required();
  simulate->add_option("--reps", reps, "number of replicate datasets");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out-dir", out_dir, "output directory");

  auto* associate = app.add_subcommand(
      "associate", "Association screen between discarded and selected");
  associate->add_option("input", input, "CSV file")->required();
  associate->add_option("--clustering", clustering, "selected variables")
      ->required();
  associate->add_option("--discarded", discarded, "discarded variables")
      ->required();
  associate->add_option("--out-dir", out_dir, "output directory");
  associate->add_flag("--no-header", no_header, "CSV has no header row");

  auto* replicate = app.add_subcommand(
      "replicate", "Replicated simulation study with selection and scoring");
  replicate->add_option("--scenario", scenario, "1 or 2")->required();
  replicate->add_option("--n-list", n_list, "comma-separated sample sizes");
  replicate->add_option("--reps", reps, "replicates per sample size");
  replicate->add_option("--modes", modes, "swap,independence");
  replicate->add_option("--seed", seed, "RNG seed");
  replicate->add_option("--g-max", g_max, "largest number of classes");
  replicate->add_option("--restarts", restarts, "EM restarts");
  replicate->add_option("--threads", threads, "parallel replicates");
  replicate->add_option("--out-dir", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (fit->parsed())
      return cmd_fit(input, g_min, g_max, restarts, seed, vars_list,
                     labels_path, out_dir, no_header);
    if (select->parsed())
      return cmd_select(input, mode, no_swap_steps, g_max, restarts, seed,
                        trace_path, out_dir, threads, no_header);
    if (simulate->parsed())
      return cmd_simulate(scenario, n, reps, seed, out_dir);
    if (associate->parsed())
      return cmd_associate(input, clustering, discarded, out_dir, no_header);
    if (replicate->parsed())
      return cmd_replicate(scenario, n_list, reps, modes, seed, g_max,
                           restarts, threads, out_dir);
  } catch (const lcasel::FitFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
