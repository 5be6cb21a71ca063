#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcasel/dataset.hpp"
#include "lcasel/rng.hpp"

namespace lcasel {

struct ScenarioSpec {
  int scenario_id = 1;
  int n = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (scenario_id != 1 && scenario_id != 2)
      throw std::invalid_argument("scenario_id must be 1 or 2");
    if (n < 1) throw std::invalid_argument("n must be >= 1");
  }
};

// Generated dataset with its ground truth. true_roles.other collects both
// redundant and noise variables; the finer split is kept alongside.
// intermediates holds the scenario-2 latent Y draws (codes 0/1), one
// column per source variable, empty for scenario 1.
struct SimulatedData {
  CategoricalDataset dataset;
  std::vector<int> true_labels;  // 1-based class labels
  VariableRoles true_roles;
  std::vector<int> redundant_vars;
  std::vector<int> noise_vars;
  std::vector<std::vector<int>> intermediates;
};

namespace detail {

inline CategoricalDataset make_sim_dataset(int n, std::span<const int> cats) {
  CategoricalDataset ds;
  ds.n_rows = n;
  ds.n_vars = static_cast<int>(cats.size());
  ds.codes.assign(static_cast<std::size_t>(n) * ds.n_vars, 0);
  for (int m = 0; m < ds.n_vars; ++m) {
    ds.n_categories.push_back(cats[m]);
    ds.var_names.push_back("X" + std::to_string(m + 1));
    std::vector<std::string> levels;
    for (int c = 1; c <= cats[m]; ++c) levels.push_back(std::to_string(c));
    ds.level_names.push_back(std::move(levels));
  }
  return ds;
}

}  // namespace detail

// Scenario 2 threshold rules on the intermediate Y values (category codes
// 1 or 2). rule_index is 0-based over X6..X10; returns the 1-based
// category of the redundant variable.
inline int scenario2_rule(int rule_index, std::span<const int> y) {
  switch (rule_index) {
    case 0: return y[0] + y[1] >= 3 ? 2 : 1;           // Y1+Y2
    case 1: return y[2] + y[5] >= 4 ? 2 : 1;           // Y3+Y6
    case 2: return y[3] + y[4] + y[6] >= 5 ? 2 : 1;    // Y4+Y5+Y7
    case 3: return y[1] + y[5] + y[7] >= 5 ? 2 : 1;    // Y2+Y6+Y8
    case 4: return y[2] + y[4] + y[7] + y[8] <= 5 ? 2 : 1;  // Y3+Y5+Y8+Y9
    default: throw std::invalid_argument("rule index out of range");
  }
}

// First simulated scenario: twelve variables, three classes with mixing
// proportions (0.3, 0.5, 0.2). X1..X4 are clustering variables, X5..X8
// follow them through per-variable transition matrices, X9..X12 are
// class-invariant noise. Draws are consumed row by row in a fixed
// column order, so identical (n, seed) yields identical bytes.
inline SimulatedData generate_scenario1(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario_id != 1)
    throw std::invalid_argument("spec is not for scenario 1");

  static constexpr std::array<double, 3> kTau = {0.3, 0.5, 0.2};
  // Class-conditional category probabilities, [class][category].
  static const std::vector<std::vector<std::vector<double>>> kTheta = {
      {{0.1, 0.9}, {0.3, 0.7}, {0.8, 0.2}},                      // X1
      {{0.1, 0.1, 0.8}, {0.2, 0.6, 0.2}, {0.8, 0.1, 0.1}},       // X2
      {{0.1, 0.7, 0.2}, {0.7, 0.1, 0.2}, {0.2, 0.2, 0.6}},       // X3
      {{0.7, 0.1, 0.1, 0.1},
       {0.1, 0.1, 0.7, 0.1},
       {0.2, 0.1, 0.1, 0.6}},                                    // X4
  };
  static const std::vector<std::vector<double>> kNoise = {
      {0.7, 0.3}, {0.6, 0.4}, {0.4, 0.3, 0.3}, {0.2, 0.3, 0.5}};
  // Transition matrices P_{1,5}, P_{2,6}, P_{3,7}, P_{4,8}: row = source
  // category, row entries = conditional distribution of the redundant
  // variable.
  static const std::vector<std::vector<std::vector<double>>> kTrans = {
      {{0.90, 0.10}, {0.20, 0.80}},
      {{0.70, 0.10, 0.20}, {0.20, 0.70, 0.10}, {0.10, 0.10, 0.80}},
      {{0.80, 0.10, 0.10}, {0.05, 0.90, 0.05}, {0.20, 0.10, 0.70}},
      {{0.70, 0.10, 0.10, 0.10},
       {0.10, 0.80, 0.05, 0.05},
       {0.10, 0.20, 0.60, 0.10},
       {0.05, 0.10, 0.05, 0.80}},
  };

  const std::array<int, 12> cats = {2, 3, 3, 4, 2, 3, 3, 4, 2, 2, 3, 3};
  SimulatedData sim;
  sim.dataset = detail::make_sim_dataset(spec.n, cats);
  sim.true_labels.resize(spec.n);
  sim.true_roles.clustering = {0, 1, 2, 3};
  sim.true_roles.other = {4, 5, 6, 7, 8, 9, 10, 11};
  sim.redundant_vars = {4, 5, 6, 7};
  sim.noise_vars = {8, 9, 10, 11};

  Rng rng(derive_seed(spec.seed, 1));
  auto& codes = sim.dataset.codes;
  for (int n = 0; n < spec.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 12;
    const int g = rng.categorical(kTau);
    sim.true_labels[n] = g + 1;
    for (int m = 0; m < 4; ++m)
      codes[base + m] = rng.categorical(kTheta[m][g]);
    for (int m = 4; m < 8; ++m)
      codes[base + m] = rng.categorical(kTrans[m - 4][codes[base + m - 4]]);
    for (int m = 8; m < 12; ++m)
      codes[base + m] = rng.categorical(kNoise[m - 8]);
  }
  sim.dataset.validate();
  return sim;
}

// Second simulated scenario: ten binary variables, two classes with
// mixing proportions (0.7, 0.3). Category 2 codes "occurrence". X1..X5
// are clustering variables; X6..X10 derive from intermediate Y draws
// (each Y_j agrees with its source X_j with probability 0.8) through the
// fixed threshold rules, generated sequentially because later redundant
// variables feed on earlier ones.
inline SimulatedData generate_scenario2(const ScenarioSpec& spec) {
  spec.validate();
  if (spec.scenario_id != 2)
    throw std::invalid_argument("spec is not for scenario 2");

  static constexpr std::array<double, 2> kTau = {0.7, 0.3};
  // Probability of occurrence (category 2) per class for X1..X5.
  static constexpr std::array<std::array<double, 2>, 5> kOccur = {{
      {0.4, 0.8}, {0.8, 0.4}, {0.2, 0.5}, {0.1, 0.8}, {0.6, 0.3}}};
  constexpr double kAgree = 0.8;  // transition matrix P diagonal

  const std::array<int, 10> cats = {2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
  SimulatedData sim;
  sim.dataset = detail::make_sim_dataset(spec.n, cats);
  sim.true_labels.resize(spec.n);
  sim.true_roles.clustering = {0, 1, 2, 3, 4};
  sim.true_roles.other = {5, 6, 7, 8, 9};
  sim.redundant_vars = {5, 6, 7, 8, 9};
  sim.intermediates.assign(9, std::vector<int>(spec.n, 0));

  Rng rng(derive_seed(spec.seed, 2));
  auto& codes = sim.dataset.codes;
  std::array<int, 9> y{};  // category codes 1/2 of Y1..Y9 for one row
  auto draw_y = [&](int code01) {
    const bool agree = rng.uniform01() < kAgree;
    return (agree ? code01 : 1 - code01) + 1;
  };
  for (int n = 0; n < spec.n; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * 10;
    const int g = rng.uniform01() < kTau[0] ? 0 : 1;
    sim.true_labels[n] = g + 1;
    for (int m = 0; m < 5; ++m)
      codes[base + m] = rng.uniform01() < kOccur[m][g] ? 1 : 0;
    for (int m = 0; m < 5; ++m) y[m] = draw_y(codes[base + m]);
    for (int r = 0; r < 5; ++r) {
      const int m = 5 + r;
      codes[base + m] = scenario2_rule(r, y) - 1;
      if (m < 9) y[m] = draw_y(codes[base + m]);  // no Y10 needed
    }
    for (int j = 0; j < 9; ++j) sim.intermediates[j][n] = y[j] - 1;
  }
  sim.dataset.validate();
  return sim;
}

inline SimulatedData generate(const ScenarioSpec& spec) {
  spec.validate();
  return spec.scenario_id == 1 ? generate_scenario1(spec)
                               : generate_scenario2(spec);
}

}  // namespace lcasel
