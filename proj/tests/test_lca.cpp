#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "lcasel/lca.hpp"
#include "lcasel/simgen.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using lcasel::best_lca_over_g;
using lcasel::CategoricalDataset;
using lcasel::classify;
using lcasel::fit_lca;
using lcasel::FitConfig;
using lcasel::FitDiagnostics;
using lcasel::LcaModel;
using lcasel::max_identifiable_g;

namespace {

void check_model_invariants(const LcaModel& m, double eps) {
  double tau_sum = 0.0;
  for (double t : m.tau) {
    REQUIRE(t >= 0.0);
    REQUIRE(t <= 1.0);
    tau_sum += t;
  }
  REQUIRE(tau_sum == Catch::Approx(1.0).margin(1e-10));
  for (const auto& per_class : m.theta)
    for (const auto& row : per_class) {
      double s = 0.0;
      for (double p : row) {
        REQUIRE(p >= eps * 0.999);
        REQUIRE(p <= 1.0 - eps * 0.999);
        s += p;
      }
      REQUIRE(s == Catch::Approx(1.0).margin(1e-10));
    }
  for (int n = 0; n < m.n_rows; ++n) {
    double s = 0.0;
    for (int g = 0; g < m.g; ++g) s += m.posterior[n * m.g + g];
    REQUIRE(s == Catch::Approx(1.0).margin(1e-10));
  }
  REQUIRE(m.bic == 2.0 * m.loglik - m.n_params * std::log(double(m.n_rows)));
}

}  // namespace

TEST_CASE("identifiability cap arithmetic", "[lca]") {
  REQUIRE(max_identifiable_g(std::vector<int>{2, 3, 3, 4}, 10) == 7);
  std::vector<int> eleven_binary(11, 2);
  REQUIRE(max_identifiable_g(eleven_binary, 200) == 170);
  REQUIRE(max_identifiable_g(std::vector<int>{2}, 5) == 1);  // floor at 1
  REQUIRE(max_identifiable_g(std::vector<int>{2, 3, 3, 4}, 3) == 3);
  REQUIRE_THROWS_AS(max_identifiable_g(std::vector<int>{}, 5),
                    std::invalid_argument);
  // many variables saturate the product without overflowing
  std::vector<int> wide(200, 4);
  REQUIRE(max_identifiable_g(wide, 1000) == 1000);
}

TEST_CASE("one-class model matches empirical proportions", "[lca]") {
  // one binary variable, counts 3/7
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 3; ++i) rows.push_back({0});
  for (int i = 0; i < 7; ++i) rows.push_back({1});
  const auto ds = testsup::make_dataset(rows);
  FitConfig fc;
  const auto m = fit_lca(ds, std::vector<int>{0}, 1, fc);
  const double expect = 3 * std::log(0.3) + 7 * std::log(0.7);
  REQUIRE(m.loglik == Catch::Approx(expect).margin(1e-8));
  REQUIRE(m.theta[0][0][0] == Catch::Approx(0.3).margin(1e-9));
  REQUIRE(m.theta[0][0][1] == Catch::Approx(0.7).margin(1e-9));
  REQUIRE(m.n_params == 1);
  check_model_invariants(m, fc.smoothing_eps);
}

TEST_CASE("scenario 1 mixing proportions recovered at g=3", "[lca]") {
  lcasel::ScenarioSpec spec{1, 1000, 99};
  const auto sim = lcasel::generate_scenario1(spec);
  FitConfig fc;
  fc.seed = 5;
  const auto m = fit_lca(sim.dataset, std::vector<int>{0, 1, 2, 3}, 3, fc);
  std::vector<double> tau = m.tau;
  std::sort(tau.begin(), tau.end());
  REQUIRE(tau[0] == Catch::Approx(0.2).margin(0.05));
  REQUIRE(tau[1] == Catch::Approx(0.3).margin(0.05));
  REQUIRE(tau[2] == Catch::Approx(0.5).margin(0.05));
  check_model_invariants(m, fc.smoothing_eps);
}

TEST_CASE("identical rows: extra class only costs parameters", "[lca]") {
  std::vector<std::vector<int>> rows(40, std::vector<int>{0, 0, 0});
  const auto ds = testsup::make_dataset(rows, {2, 2, 2});
  FitConfig fc;
  const auto m1 = fit_lca(ds, std::vector<int>{0, 1, 2}, 1, fc);
  const auto m2 = fit_lca(ds, std::vector<int>{0, 1, 2}, 2, fc);
  REQUIRE(m1.bic > m2.bic);
}

TEST_CASE("best_lca_over_g honors the identifiability floor", "[lca]") {
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({i % 2});
  const auto ds = testsup::make_dataset(rows);
  FitConfig fc;
  const auto m = best_lca_over_g(ds, std::vector<int>{0}, 10, fc);
  REQUIRE(m.g == 1);
}

TEST_CASE("scenario 1 chooses three classes on the true variables",
          "[lca][slow]") {
  int hits = 0;
  const std::vector<int> vars{0, 1, 2, 3};
  for (int rep = 0; rep < 20; ++rep) {
    lcasel::ScenarioSpec spec{1, 1000,
                              lcasel::derive_seed(4000, uint64_t(rep))};
    const auto sim = lcasel::generate_scenario1(spec);
    FitConfig fc;
    fc.seed = spec.seed;
    const auto m = best_lca_over_g(sim.dataset, vars, 7, fc);
    if (m.g == 3) ++hits;
  }
  REQUIRE(hits >= 15);  // the large majority of seeds
}

TEST_CASE("scenario 2 chooses two classes on the true variables",
          "[lca][slow]") {
  int hits = 0;
  const std::vector<int> vars{0, 1, 2, 3, 4};
  for (int rep = 0; rep < 20; ++rep) {
    lcasel::ScenarioSpec spec{2, 1500,
                              lcasel::derive_seed(5000, uint64_t(rep))};
    const auto sim = lcasel::generate_scenario2(spec);
    FitConfig fc;
    fc.seed = spec.seed;
    const auto m = best_lca_over_g(sim.dataset, vars, 5, fc);
    if (m.g == 2) ++hits;
  }
  REQUIRE(hits >= 15);
}

TEST_CASE("classification follows the posterior argmax", "[lca]") {
  lcasel::ScenarioSpec spec{1, 300, 17};
  const auto sim = lcasel::generate_scenario1(spec);
  FitConfig fc;
  fc.seed = 2;
  const auto m = fit_lca(sim.dataset, std::vector<int>{0, 1, 2, 3}, 3, fc);
  const auto labels = classify(m);
  REQUIRE(labels.size() == std::size_t(m.n_rows));
  for (int n = 0; n < m.n_rows; ++n) {
    int arg = 0;
    for (int g = 0; g < m.g; ++g)
      if (m.posterior[n * m.g + g] > m.posterior[n * m.g + arg]) arg = g;
    REQUIRE(labels[n] == arg + 1);  // ties resolve to the smaller index
    REQUIRE(labels[n] >= 1);
    REQUIRE(labels[n] <= m.g);
  }

  const auto m1 = fit_lca(sim.dataset, std::vector<int>{0, 1, 2, 3}, 1, fc);
  for (int lab : classify(m1)) REQUIRE(lab == 1);
}

TEST_CASE("EM log-likelihood is monotone within every restart", "[lca]") {
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 20 + int(trial * 3.7) % 180;
    const int m_vars = 2 + trial % 4;
    std::vector<int> cats(m_vars);
    for (int m = 0; m < m_vars; ++m) cats[m] = 2 + (trial + m) % 3;
    const auto ds = testsup::random_dataset(n, m_vars, cats, 700 + trial);
    std::vector<int> vars(m_vars);
    for (int m = 0; m < m_vars; ++m) vars[m] = m;
    FitConfig fc;
    fc.seed = trial;
    FitDiagnostics diag;
    const int g = 1 + trial % 4;
    try {
      fit_lca(ds, vars, g, fc, &diag);
    } catch (const lcasel::FitFailure&) {
      // degenerate solutions still leave their histories in diag
    }
    for (const auto& r : diag.restarts)
      for (std::size_t i = 1; i < r.loglik_history.size(); ++i)
        REQUIRE(r.loglik_history[i] >= r.loglik_history[i - 1] - 1e-8);
  }
}

TEST_CASE("more restarts never hurt", "[lca]") {
  lcasel::ScenarioSpec spec{1, 400, 31};
  const auto sim = lcasel::generate_scenario1(spec);
  FitConfig one;
  one.seed = 9;
  one.n_restarts = 1;
  FitConfig ten = one;
  ten.n_restarts = 10;
  const std::vector<int> vars{0, 1, 2, 3};
  const auto m1 = fit_lca(sim.dataset, vars, 3, one);
  const auto m10 = fit_lca(sim.dataset, vars, 3, ten);
  REQUIRE(m10.loglik >= m1.loglik - 1e-12);
}

TEST_CASE("EM reaches the grid-search oracle on tiny problems", "[lca]") {
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + trial % 5;
    const int m_vars = 1 + trial % 3;
    std::vector<int> cats(m_vars, 2);
    const auto ds = testsup::random_dataset(n, m_vars, cats, 900 + trial);
    std::vector<int> vars(m_vars);
    for (int m = 0; m < m_vars; ++m) vars[m] = m;
    FitConfig fc;
    fc.seed = trial;
    LcaModel m;
    try {
      m = fit_lca(ds, vars, 2, fc);
    } catch (const lcasel::FitFailure&) {
      continue;  // tiny-N degeneracy is legitimate; nothing to compare
    }
    const double oracle = oracles::oracle_grid_lca2(ds, vars);
    REQUIRE(m.loglik >= oracle - 1e-6);
  }
}

TEST_CASE("category relabeling leaves the likelihood unchanged", "[lca]") {
  lcasel::ScenarioSpec spec{1, 500, 77};
  auto sim = lcasel::generate_scenario1(spec);
  const std::vector<int> vars{0, 1, 2, 3};
  FitConfig fc;
  fc.seed = 21;
  const auto base = fit_lca(sim.dataset, vars, 3, fc);

  // reverse the categories of X2 (3 levels)
  auto permuted = sim.dataset;
  for (int n = 0; n < permuted.n_rows; ++n) {
    int& c = permuted.codes[std::size_t(n) * permuted.n_vars + 1];
    c = 2 - c;
  }
  const auto flipped = fit_lca(permuted, vars, 3, fc);
  REQUIRE(flipped.loglik == Catch::Approx(base.loglik).margin(1e-8));
  REQUIRE(flipped.bic == Catch::Approx(base.bic).margin(1e-8));
}

TEST_CASE("degenerate restarts raise a fit failure", "[lca]") {
  // A single row cannot support two classes: the mixing weight of one
  // class falls below 1/(10N) whenever the initial split is lopsided.
  std::vector<std::vector<int>> rows = {{0, 1}};
  const auto ds = testsup::make_dataset(rows, {2, 2});
  FitConfig fc;
  fc.n_restarts = 1;
  bool failed_for_some_seed = false;
  for (std::uint64_t seed = 0; seed < 30 && !failed_for_some_seed; ++seed) {
    fc.seed = seed;
    try {
      fit_lca(ds, std::vector<int>{0, 1}, 2, fc);
    } catch (const lcasel::FitFailure&) {
      failed_for_some_seed = true;
    }
  }
  REQUIRE(failed_for_some_seed);
}

TEST_CASE("config validation", "[lca]") {
  FitConfig fc;
  fc.n_restarts = 0;
  REQUIRE_THROWS_AS(fc.validate(), std::invalid_argument);
  fc = FitConfig{};
  fc.rel_tol = 0.0;
  REQUIRE_THROWS_AS(fc.validate(), std::invalid_argument);
  fc = FitConfig{};
  fc.smoothing_eps = 0.6;
  REQUIRE_THROWS_AS(fc.validate(), std::invalid_argument);

  const auto ds = testsup::make_dataset({{0, 1}, {1, 0}});
  REQUIRE_THROWS_AS(fit_lca(ds, std::vector<int>{}, 1, FitConfig{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(fit_lca(ds, std::vector<int>{0}, 0, FitConfig{}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(fit_lca(ds, std::vector<int>{7}, 1, FitConfig{}),
                    std::invalid_argument);
}
