#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "lcasel/assoc.hpp"
#include "lcasel/rng.hpp"
#include "lcasel/simgen.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using lcasel::association_screen;
using lcasel::VariableRoles;

TEST_CASE("identical binary pair has a closed-form association score",
          "[assoc]") {
  std::vector<std::vector<int>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({0, 0});
  for (int i = 0; i < 60; ++i) rows.push_back({1, 1});
  const auto ds = testsup::make_dataset(rows);
  VariableRoles roles;
  roles.clustering = {0};
  roles.other = {1};
  const auto m = association_screen(ds, roles);
  REQUIRE(m.bic_diff_as.size() == 1);
  REQUIRE(m.bic_diff_as[0].size() == 1);
  // separation limit: loglik 0 against the null 40 log .4 + 60 log .6
  REQUIRE(m.bic_diff_as[0][0] == Catch::Approx(129.997).margin(2e-3));
}

TEST_CASE("independent pairs score negative", "[assoc]") {
  int negative = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = testsup::random_dataset(
        500, 2, {2, 2}, lcasel::derive_seed(2700, uint64_t(rep)));
    VariableRoles roles;
    roles.clustering = {0};
    roles.other = {1};
    const auto m = association_screen(ds, roles);
    if (m.bic_diff_as[0][0] < 0) ++negative;
  }
  REQUIRE(negative >= 8);
}

TEST_CASE("regression form equals the log-linear form", "[assoc]") {
  lcasel::Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 80 + trial * 13;
    const int cx = 2 + trial % 3, cy = 2 + (trial + 1) % 2;
    std::vector<std::vector<int>> rows;
    for (int i = 0; i < n; ++i) {
      const int x = int(rng.uniform01() * cx);
      // mildly dependent y
      int y = int(rng.uniform01() * cy);
      if (rng.uniform01() < 0.35) y = x % cy;
      rows.push_back({x, y});
    }
    const auto ds = testsup::make_dataset(rows, {cx, cy});
    VariableRoles roles;
    roles.clustering = {0};
    roles.other = {1};
    const auto m = association_screen(ds, roles);
    const auto g2 = oracles::oracle_g2(ds, 1, 0);
    const double loglinear = g2.g2 - g2.df * std::log(double(n));
    REQUIRE(m.bic_diff_as[0][0] == Catch::Approx(loglinear).margin(1e-3));
  }
}

TEST_CASE("association verdict is symmetric for equal category counts",
          "[assoc]") {
  for (int rep = 0; rep < 10; ++rep) {
    const auto ds = testsup::random_dataset(
        300, 2, {2, 2}, lcasel::derive_seed(2900, uint64_t(rep)));
    VariableRoles ab{{0}, {1}}, ba{{1}, {0}};
    const double d1 = association_screen(ds, ab).bic_diff_as[0][0];
    const double d2 = association_screen(ds, ba).bic_diff_as[0][0];
    REQUIRE((d1 > 0) == (d2 > 0));
  }
}

TEST_CASE("scenario 1 screen flags each redundant-source pair",
          "[assoc][slow]") {
  // X5..X8 are generated from X1..X4 respectively; X9..X12 from nothing.
  int structured = 0;
  for (int rep = 0; rep < 10; ++rep) {
    lcasel::ScenarioSpec spec{1, 1000,
                              lcasel::derive_seed(3100, uint64_t(rep))};
    const auto sim = lcasel::generate_scenario1(spec);
    VariableRoles roles;
    roles.clustering = {0, 1, 2, 3};
    roles.other = {4, 5, 6, 7, 8, 9, 10, 11};
    const auto m = association_screen(sim.dataset, roles);
    bool ok = true;
    for (int k = 0; k < 4; ++k) ok &= m.bic_diff_as[k][k] > 0;  // (X5,X1)...
    for (int r = 4; r < 8; ++r)                                 // noise rows
      for (int c = 0; c < 4; ++c) ok &= m.bic_diff_as[r][c] < 0;
    if (ok) ++structured;
  }
  REQUIRE(structured >= 8);
}

TEST_CASE("matrix dimensions follow the roles", "[assoc]") {
  const auto ds = testsup::random_dataset(100, 5, {2, 2, 3, 2, 2}, 888);
  VariableRoles roles;
  roles.clustering = {0, 2};
  roles.other = {1, 3, 4};
  const auto m = association_screen(ds, roles);
  REQUIRE(m.selected == roles.clustering);
  REQUIRE(m.discarded == roles.other);
  REQUIRE(m.bic_diff_as.size() == 3);
  for (const auto& row : m.bic_diff_as) REQUIRE(row.size() == 2);
}

TEST_CASE("association screen rejects empty role sets", "[assoc]") {
  const auto ds = testsup::random_dataset(50, 2, {2, 2}, 3);
  VariableRoles roles;
  roles.clustering = {0, 1};
  roles.other = {};
  REQUIRE_THROWS_AS(association_screen(ds, roles), std::invalid_argument);
}
