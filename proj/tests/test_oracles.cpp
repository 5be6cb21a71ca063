#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "lcasel/lca.hpp"
#include "lcasel/logreg.hpp"
#include "lcasel/simgen.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

TEST_CASE("direct-sum mixture likelihood agrees with the closed forms",
          "[oracles]") {
  const auto ds = testsup::random_dataset(60, 3, {2, 3, 2}, 101);
  const std::vector<int> vars{0, 1, 2};

  // one class with empirical frequencies
  std::vector<std::vector<std::vector<double>>> theta(1);
  theta[0].resize(3);
  for (int m = 0; m < 3; ++m) {
    theta[0][m].assign(ds.n_categories[m], 0.0);
    for (int n = 0; n < ds.n_rows; ++n) theta[0][m][ds.code(n, m)] += 1.0;
    for (double& p : theta[0][m]) p /= ds.n_rows;
  }
  const double direct =
      oracles::oracle_lca_loglik(ds, vars, {1.0}, theta);
  REQUIRE(direct == Catch::Approx(oracles::oracle_multinomial_loglik(ds, vars))
                        .margin(1e-10));

  // a degenerate two-class mixture equals its live component
  std::vector<std::vector<std::vector<double>>> theta2 = {theta[0], theta[0]};
  for (auto& row : theta2[1])
    for (double& p : row) p = 1.0 / row.size();
  const double degenerate =
      oracles::oracle_lca_loglik(ds, vars, {1.0, 0.0}, theta2);
  REQUIRE(degenerate == Catch::Approx(direct).margin(1e-10));
}

TEST_CASE("oracle validates a converged EM fit", "[oracles]") {
  lcasel::ScenarioSpec spec{1, 600, 55};
  const auto sim = lcasel::generate_scenario1(spec);
  lcasel::FitConfig fc;
  fc.seed = 7;
  const std::vector<int> vars{0, 1, 2, 3};
  const auto m = lcasel::fit_lca(sim.dataset, vars, 3, fc);
  const double oracle =
      oracles::oracle_lca_loglik(sim.dataset, vars, m.tau, m.theta);
  const auto report =
      oracles::compare("lca loglik", m.loglik, oracle, 1e-8);
  INFO(report.quantity << ": " << report.fast << " vs " << report.oracle);
  REQUIRE(report.pass());
}

TEST_CASE("single-predictor regression oracle closed forms", "[oracles]") {
  // perfect prediction
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({0, 0});
  for (int i = 0; i < 10; ++i) rows.push_back({1, 1});
  const auto perfect = testsup::make_dataset(rows);
  REQUIRE(oracles::oracle_logreg_loglik_single_predictor(perfect, 0, 1) ==
          Catch::Approx(0.0).margin(1e-12));

  // independence: [[5,5],[5,5]]
  rows.clear();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 5; ++i) rows.push_back({a, b});
  const auto indep = testsup::make_dataset(rows);
  REQUIRE(oracles::oracle_logreg_loglik_single_predictor(indep, 0, 1) ==
          Catch::Approx(20.0 * std::log(0.5)).margin(1e-12));

  // random table: the Newton fit attains the saturated maximum
  const auto ds = testsup::random_dataset(90, 2, {3, 2}, 2024);
  const auto fit = lcasel::fit_multinom(ds, 0, std::vector<int>{1});
  REQUIRE(fit.loglik ==
          Catch::Approx(
              oracles::oracle_logreg_loglik_single_predictor(ds, 0, 1))
              .margin(1e-3));
}

TEST_CASE("likelihood-ratio statistic oracle", "[oracles]") {
  // independent uniform table at its expectation: [[25,25],[25,25]]
  std::vector<std::vector<int>> rows;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 25; ++i) rows.push_back({a, b});
  const auto flat = testsup::make_dataset(rows);
  auto g2 = oracles::oracle_g2(flat, 0, 1);
  REQUIRE(g2.g2 == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(g2.df == 1);

  // diagonal table [[40,0],[0,60]]
  rows.clear();
  for (int i = 0; i < 40; ++i) rows.push_back({0, 0});
  for (int i = 0; i < 60; ++i) rows.push_back({1, 1});
  const auto diag = testsup::make_dataset(rows);
  g2 = oracles::oracle_g2(diag, 0, 1);
  REQUIRE(g2.g2 == Catch::Approx(134.602).margin(5e-4));
  REQUIRE(g2.df == 1);
}

TEST_CASE("oracle report bookkeeping", "[oracles]") {
  const auto ok = oracles::compare("q", 1.0, 1.0 + 5e-9, 1e-8);
  REQUIRE(ok.pass());
  const auto bad = oracles::compare("q", 1.0, 1.1, 1e-8);
  REQUIRE_FALSE(bad.pass());
  REQUIRE(bad.difference == Catch::Approx(0.1).margin(1e-12));
}
