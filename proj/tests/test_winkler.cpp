#include <gtest/gtest.h>

#include <cmath>

#include "loanelicit/winkler.hpp"

using namespace loanelicit;

namespace {

WinklerInstance equal_instance(std::size_t n, std::size_t m, double c, std::optional<std::size_t> k = std::nullopt) {
  return WinklerInstance{n, m, ScoreThreshold(c), WeightedLinear{WeightVector::equal(n)}, k};
}

BeliefProfile table_beliefs() { return BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}}); }

// Expected log-Winkler score centred at t, from the definition in long double.
long double expected_oracle(long double t, long double p, long double r) {
  const long double denom = r <= t ? -std::log(1.0L - t) : -std::log(t);
  long double s = 0.0L;
  if (p > 0) s += p * (std::log(r) - std::log(t)) / denom;
  if (p < 1) s += (1 - p) * (std::log(1.0L - r) - std::log(1.0L - t)) / denom;
  return s;
}

}  // namespace

TEST(Winkler, AggregatesAndCappedAllocation) {
  const auto inst = equal_instance(3, 2, 0.5, 1);
  const auto b = winkler_aggregates(inst, table_beliefs());
  EXPECT_NEAR(b[0], 1.7 / 3, 1e-15);
  EXPECT_NEAR(b[1], 0.55, 1e-15);
  const Allocation a = allocate_winkler(inst, table_beliefs());
  EXPECT_TRUE(a.funded[0]);
  EXPECT_FALSE(a.funded[1]);

  const Allocation uncapped = allocate_winkler(equal_instance(3, 2, 0.5), table_beliefs());
  EXPECT_TRUE(uncapped.funded[0]);
  EXPECT_TRUE(uncapped.funded[1]);
}

TEST(Winkler, MarginalThresholdsOfCounterexample) {
  const auto t = marginal_thresholds(equal_instance(3, 2, 0.5, 1), table_beliefs());
  const double expect[3][2] = {{0.5, 0.25}, {0.2, 0.7}, {0.4, 0.25}};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t q = 0; q < 2; ++q) EXPECT_NEAR(t(i, q), expect[i][q], 1e-12);
  }
}

TEST(Winkler, HonestUtilitiesAgainstOracle) {
  const auto inst = equal_instance(3, 2, 0.5, 1);
  const auto p = table_beliefs();
  // Only borrower 1 is funded; thresholds (0.5, 0.2, 0.4).
  const double t[3] = {0.5, 0.2, 0.4};
  for (std::size_t i = 0; i < 3; ++i) {
    const long double want = expected_oracle(t[i], p(i, 0), p(i, 0));
    EXPECT_NEAR(winkler_expected_utility(inst, p, i, p.row(i)), static_cast<double>(want), 1e-12);
  }
}

TEST(Winkler, BisectionMatchesLinearThreshold) {
  auto inst = equal_instance(3, 2, 0.5, 1);
  auto custom = inst;
  custom.aggregator = MonotoneCustom{3, [](std::span<const double> c) { return (c[0] + c[1] + c[2]) / 3.0; }};
  const auto a = marginal_thresholds(inst, table_beliefs());
  const auto b = marginal_thresholds(custom, table_beliefs());
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t q = 0; q < 2; ++q) EXPECT_NEAR(a(i, q), b(i, q), 1e-12);
  }
}

TEST(Winkler, DegenerateThresholds) {
  EXPECT_EQ(winkler_marginal_score(0.0, 0.3, Outcome::Repaid), 1.0);
  EXPECT_EQ(winkler_marginal_score(0.0, 0.3, Outcome::Default), 0.0);
  EXPECT_EQ(winkler_marginal_score(1.0, 0.3, Outcome::Repaid), 0.0);
  EXPECT_EQ(winkler_marginal_score(kCannotSwing, 0.3, Outcome::Repaid), 0.0);
  EXPECT_EQ(winkler_marginal_expected(0.0, 0.7, 0.2), 0.7);

  // A zero-weight recommender cannot move any aggregate.
  WinklerInstance inst{2, 1, ScoreThreshold(0.5), WeightedLinear{WeightVector::normalized({1.0, 0.0})}, std::nullopt};
  const auto p = BeliefProfile::from_rows({{0.8}, {0.9}});
  EXPECT_EQ(marginal_threshold(inst, p, 1, 0), kCannotSwing);
  EXPECT_EQ(winkler_expected_utility(inst, p, 1, p.row(1)), 0.0);
}

TEST(Winkler, SettlementChecksOutcomes) {
  const auto inst = equal_instance(3, 2, 0.5, 1);
  EXPECT_THROW(settle_winkler(inst, table_beliefs(), {std::nullopt, std::nullopt}), Error);
  EXPECT_THROW(settle_winkler(inst, table_beliefs(), {Outcome::Repaid, Outcome::Repaid}), Error);
  const auto r = settle_winkler(inst, table_beliefs(), {Outcome::Repaid, std::nullopt});
  EXPECT_EQ(r.immediate, std::vector<double>(3, 0.0));
  EXPECT_EQ(r.tcomp, std::vector<double>(3, 0.0));
  EXPECT_NEAR(r.contingent[0][0], 1.0 - std::log(0.7) / std::log(0.5), 1e-12);
  EXPECT_EQ(r.contingent[1][1], 0.0);
}

TEST(Winkler, ShapeErrors) {
  const auto inst = equal_instance(3, 2, 0.5);
  EXPECT_THROW(allocate_winkler(inst, BeliefProfile(2, 2)), Error);
  auto bad = inst;
  bad.aggregator = WeightedLinear{WeightVector::equal(2)};
  EXPECT_THROW(validate(bad), Error);
  bad = inst;
  bad.liquidity = 0;
  EXPECT_THROW(validate(bad), Error);
}

// Without a liquidity cap each borrower is decided independently and
// truthful reporting is a best response to fixed co-reports.
TEST(WinklerProperty, UncappedTruthIsExPostBestResponse) {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + rng() % 3;
    const std::size_t m = 1 + rng() % 3;
    const auto inst = equal_instance(n, m, 0.2 + 0.6 * uniform01(rng));
    BeliefProfile p(n, m);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t q = 0; q < m; ++q) p(i, q) = 0.02 + 0.96 * uniform01(rng);
    }
    const std::size_t i = rng() % n;
    const double truth = winkler_expected_utility(inst, p, i, p.row(i));
    EXPECT_GE(truth, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      for (int k = 1; k < 100; ++k) {
        BeliefProfile r = p;
        r(i, q) = k / 100.0;
        EXPECT_LE(winkler_expected_utility(inst, r, i, p.row(i)), truth + 1e-12);
      }
    }
  }
}

TEST(WinklerModel, MatchesDirectUtility) {
  const auto inst = equal_instance(3, 2, 0.5, 1);
  const WinklerModel linear(inst);
  auto custom = inst;
  custom.aggregator = MonotoneCustom{3, [](std::span<const double> c) { return (c[0] + c[1] + c[2]) / 3.0; }};
  const WinklerModel slow(custom);
  const auto p = table_beliefs();
  for (const WinklerModel* model : {&linear, &slow}) {
    auto ctx = model->make_context();
    auto ws = model->make_workspace();
    model->prepare(1, p, ctx);
    const std::vector<double> mis{0.0, 0.85};
    const auto truth = model->make_report(p.row(1), p.row(1));
    const auto dev = model->make_report(p.row(1), mis);
    BeliefProfile r = p;
    r(1, 0) = 0.0;
    EXPECT_NEAR(model->utility(ctx, truth, ws), winkler_expected_utility(inst, p, 1, p.row(1)), 1e-12);
    EXPECT_NEAR(model->utility(ctx, dev, ws), winkler_expected_utility(inst, r, 1, p.row(1)), 1e-12);
  }
}
