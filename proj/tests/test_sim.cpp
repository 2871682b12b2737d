#include <gtest/gtest.h>

#include <sstream>

#include "loanelicit/sim.hpp"

using namespace loanelicit;

namespace {

CampaignConfig budescu_config(MechanismKind kind = MechanismKind::Vcg) {
  CampaignConfig c;
  c.recommenders = 3;
  c.borrowers = 10;
  c.mechanism.kind = kind;
  c.mechanism.threshold = 0.5;
  c.mechanism.liquidity = 5;
  c.mechanism.tcomp = true;
  c.world.mixing = {0.9, 0.5, 0.1};
  c.weight_mode = WeightMode::Budescu;
  c.initial_weights = WeightVector::equal(3);
  return c;
}

}  // namespace

TEST(Sim, ValidationErrors) {
  auto c = budescu_config();
  c.world.mixing = {0.5};
  EXPECT_THROW(validate(c), Error);
  c = budescu_config();
  c.mechanism.liquidity = 11;
  EXPECT_THROW(validate(c), Error);
  c = budescu_config();
  c.world.truth = truth::Fixed{{0.5}};
  EXPECT_THROW(validate(c), Error);
  c = budescu_config();
  c.report_shift = {0.1};
  EXPECT_THROW(validate(c), Error);
}

TEST(Sim, RoundOutcomesOnlyForFunded) {
  const auto c = budescu_config();
  const auto rec = run_round(c, c.initial_weights, 0, 42, scenario_hash(c));
  ASSERT_EQ(rec.outcomes.size(), 10u);
  for (std::size_t q = 0; q < 10; ++q) EXPECT_EQ(rec.allocation.funded[q], rec.outcomes[q].has_value());
  EXPECT_LE(rec.allocation.funded_count(), 5u);
  EXPECT_EQ(rec.reports, rec.beliefs);
  EXPECT_DOUBLE_EQ(rec.deficit, deficit(rec.settlement));
}

TEST(Sim, BeliefsMixTruthAndNoise) {
  auto c = budescu_config();
  c.world.mixing = {1.0, 0.0, 0.5};
  c.world.truth = truth::Fixed{std::vector<double>(10, 0.3)};
  const auto rec = run_round(c, c.initial_weights, 3, 1, scenario_hash(c));
  for (std::size_t q = 0; q < 10; ++q) EXPECT_EQ(rec.beliefs(0, q), 0.3);
}

TEST(Sim, ReportShiftIsClamped) {
  auto c = budescu_config();
  c.report_shift = {0.0, 2.0, -2.0};
  const auto rec = run_round(c, c.initial_weights, 0, 1, scenario_hash(c));
  for (std::size_t q = 0; q < 10; ++q) {
    EXPECT_EQ(rec.reports(1, q), 1.0);
    EXPECT_EQ(rec.reports(2, q), 0.0);
  }
}

TEST(Sim, CampaignIsDeterministic) {
  const auto c = budescu_config();
  const auto a = campaign(c, 20, 7);
  const auto b = campaign(c, 20, 7);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.terminal_weights, b.terminal_weights);
  EXPECT_NE(campaign(c, 20, 8).records, a.records);
}

TEST(Sim, WeightsDependOnlyOnEarlierRounds) {
  const auto c = budescu_config();
  const auto s = campaign(c, 15, 3);
  for (std::size_t r = 0; r < s.records.size(); ++r) {
    const std::vector<LedgerRecord> prefix(s.records.begin(), s.records.begin() + static_cast<std::ptrdiff_t>(r));
    const WeightVector expect = prefix.empty() ? c.initial_weights : evolve_weights(prefix, 3);
    EXPECT_EQ(s.records[r].weights, std::vector<double>(expect.values().begin(), expect.values().end()));
    EXPECT_EQ(s.weight_trajectory[r], s.records[r].weights);
  }
  // A shorter campaign with the same seed is a prefix of the longer one.
  const auto shorter = campaign(c, 8, 3);
  for (std::size_t r = 0; r < 8; ++r) EXPECT_EQ(shorter.records[r], s.records[r]);
}

TEST(Sim, LedgerRoundTripAndReplay) {
  for (auto kind : {MechanismKind::Vcg, MechanismKind::Winkler}) {
    const auto c = budescu_config(kind);
    const auto s = campaign(c, 10, 11);
    std::stringstream buf;
    write_ledger(buf, s.records);
    const auto back = read_ledger(buf);
    ASSERT_EQ(back.size(), s.records.size());
    for (std::size_t r = 0; r < back.size(); ++r) {
      EXPECT_EQ(back[r], s.records[r]);
      EXPECT_TRUE(replay_round(c, back[r]));
    }
    auto tampered = back[4];
    tampered.deficit += 1e-9;
    EXPECT_FALSE(replay_round(c, tampered));
    auto other = c;
    other.mechanism.alpha = 0.5;
    EXPECT_FALSE(replay_round(other, back[4]));
  }
}

TEST(Sim, LedgerErrorsCarryLineNumbers) {
  std::stringstream buf("{\"schema_version\": 1}\n");
  try {
    read_ledger(buf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
  std::stringstream wrong("{\"schema_version\": 9}\n");
  EXPECT_THROW(read_ledger(wrong), Error);
}

TEST(Sim, ScenarioHashTracksConfig) {
  auto a = budescu_config();
  auto b = a;
  EXPECT_EQ(scenario_hash(a), scenario_hash(b));
  b.world.mixing[2] = 0.2;
  EXPECT_NE(scenario_hash(a), scenario_hash(b));
  EXPECT_EQ(scenario_hash(a).size(), 16u);
}

TEST(Sim, AlphaScalesDeficitLinearly) {
  auto full = budescu_config();
  full.weight_mode = WeightMode::Fixed;
  auto half = full;
  half.mechanism.alpha = 0.5;
  const auto a = campaign(full, 20, 2);
  const auto b = campaign(half, 20, 2);
  EXPECT_EQ(a.funded, b.funded);
  for (std::size_t r = 0; r < 20; ++r) {
    EXPECT_EQ(a.records[r].allocation, b.records[r].allocation);
    EXPECT_EQ(b.records[r].deficit, 0.5 * a.records[r].deficit);
  }
}

TEST(Sim, RebateKeepsEveryRoundIndividuallyRational) {
  const auto s = campaign(budescu_config(), 30, 5);
  EXPECT_GE(s.min_realized_utility, 0.0);
}

TEST(Sim, AccurateRecommenderGainsWeight) {
  std::size_t top = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto s = campaign(budescu_config(), 50, seed);
    EXPECT_NEAR(std::accumulate(s.terminal_weights.begin(), s.terminal_weights.end(), 0.0), 1.0, 1e-9);
    if (std::max_element(s.terminal_weights.begin(), s.terminal_weights.end()) == s.terminal_weights.begin()) ++top;
  }
  EXPECT_GE(top, 18u);
}

TEST(Sim, SlidingWindowUsesRecentRoundsOnly) {
  const auto s = campaign(budescu_config(), 12, 9);
  const std::vector<LedgerRecord> tail(s.records.end() - 4, s.records.end());
  EXPECT_EQ(evolve_weights(s.records, 3, 4), evolve_weights(tail, 3));
}
