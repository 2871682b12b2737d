#include <gtest/gtest.h>

#include <bit>

#include "loanelicit/audit.hpp"
#include "loanelicit/vcg.hpp"

using namespace loanelicit;

namespace {

VcgInstance table_instance(bool tcomp_enabled = false) {
  VcgInstance inst;
  inst.recommenders = 3;
  inst.borrowers = 2;
  inst.liquidity = 1;
  inst.reserve = 0.5;
  inst.weights = WeightVector::equal(3);
  inst.tcomp_enabled = tcomp_enabled;
  return inst;
}

BeliefProfile table_beliefs() { return BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}}); }

// Welfare of the best feasible set computed from scratch, optionally leaving
// out one recommender.
struct Best {
  double welfare;
  std::uint64_t mask;
};

Best best_set(const VcgInstance& inst, const BeliefProfile& r, std::optional<std::size_t> skip) {
  const std::size_t m = inst.borrowers;
  Best best{-1e300, 0};
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    const std::size_t size = std::popcount(mask);
    if (size > inst.liquidity || (!inst.has_reserve() && size != inst.liquidity)) continue;
    double total = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      if (!((mask >> q) & 1U)) continue;
      for (std::size_t i = 0; i < inst.recommenders; ++i) {
        if (!skip || i != *skip) total += inst.weights[i] * r(i, q);
      }
    }
    total += static_cast<double>(inst.liquidity - size) * (inst.has_reserve() ? inst.reserve : 0.0);
    if (total > best.welfare + 1e-12) best = {total, mask};
  }
  return best;
}

double others_welfare_on(const VcgInstance& inst, const BeliefProfile& r, std::size_t skip, const Allocation& a) {
  double total = 0.0;
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (!a.funded[q]) continue;
    for (std::size_t j = 0; j < inst.recommenders; ++j) {
      if (j != skip) total += inst.weights[j] * r(j, q);
    }
  }
  return total + static_cast<double>(a.reserves_funded) * inst.reserve;
}

double pivot_oracle(const VcgInstance& inst, const BeliefProfile& r, std::size_t i) {
  return best_set(inst, r, i).welfare - others_welfare_on(inst, r, i, allocate_vcg(inst, r));
}

// Largest pivot over i's report on every 0/1 vertex of the report cube.
double tcomp_vertex_oracle(const VcgInstance& inst, const BeliefProfile& r, std::size_t i) {
  double worst = 0.0;
  BeliefProfile dev = r;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inst.borrowers); ++mask) {
    for (std::size_t q = 0; q < inst.borrowers; ++q) dev(i, q) = (mask >> q) & 1U ? 1.0 : 0.0;
    worst = std::max(worst, pivot_oracle(inst, dev, i));
  }
  return worst;
}

}  // namespace

TEST(Vcg, ThreeByTwoAllocationAndPivot) {
  const auto inst = table_instance();
  const auto a = allocate_vcg(inst, table_beliefs());
  EXPECT_TRUE(a.funded[0]);
  EXPECT_FALSE(a.funded[1]);
  EXPECT_EQ(a.reserves_funded, 0u);
  // Without recommender 2 borrower 1 scores (0.7+0.6)/3 against reserve 0.5.
  EXPECT_NEAR(pivot_payment(inst, table_beliefs(), 1), 0.5 - 0.4 / 3.0 - 0.3, 1e-12);
  EXPECT_NEAR(pivot_payment(inst, table_beliefs(), 1), 1.0 / 15.0, 1e-12);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(pivot_payment(inst, table_beliefs(), i), pivot_oracle(inst, table_beliefs(), i), 1e-12);
  }
}

TEST(Vcg, ThreeByTwoRebateByFineGridSearch) {
  const auto inst = table_instance();
  const auto p = table_beliefs();
  double worst = 0.0;
  BeliefProfile dev = p;
  for (int a = 0; a <= 200; ++a) {
    for (int b = 0; b <= 200; ++b) {
      dev(1, 0) = a / 200.0;
      dev(1, 1) = b / 200.0;
      worst = std::max(worst, pivot_payment(inst, dev, 1));
    }
  }
  const TcompResult t = tcomp(inst, p, 1);
  EXPECT_TRUE(t.exact);
  EXPECT_NEAR(t.value, worst, 1e-12);
  EXPECT_NEAR(t.value, 0.5 - 0.8 / 3.0, 1e-12);
}

TEST(Vcg, RebateIgnoresOwnRow) {
  const auto inst = table_instance();
  auto p = table_beliefs();
  const double before = tcomp(inst, p, 1).value;
  p(1, 0) = 0.01;
  p(1, 1) = 0.99;
  EXPECT_EQ(tcomp(inst, p, 1).value, before);
}

TEST(Vcg, Validation) {
  auto inst = table_instance();
  inst.liquidity = 3;
  EXPECT_THROW(validate(inst), Error);
  inst = table_instance();
  inst.reserve = 1.0;
  EXPECT_THROW(validate(inst), Error);
  inst = table_instance();
  inst.weights = WeightVector::equal(2);
  EXPECT_THROW(validate(inst), Error);
  inst = table_instance();
  inst.alpha = 0.0;
  EXPECT_THROW(validate(inst), Error);
  try {
    pivot_payment(table_instance(), table_beliefs(), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReserveRecommenderHasNoPayment);
  }
}

TEST(Vcg, NoReserveAlwaysFillsLiquidity) {
  VcgInstance inst = table_instance();
  inst.reserve = 0.0;
  inst.liquidity = 2;
  const auto p = BeliefProfile::from_rows({{0.1, 0.05}, {0.0, 0.1}, {0.2, 0.0}});
  const auto a = allocate_vcg(inst, p);
  EXPECT_EQ(a.funded_count(), 2u);
}

TEST(VcgProperty, AllocationAndPaymentsMatchOracles) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const VcgCase c = random_vcg_case(rng, 4, 5, true);
    const auto a = allocate_vcg(c.instance, c.beliefs);
    std::uint64_t mask = 0;
    for (std::size_t q = 0; q < c.instance.borrowers; ++q) {
      if (a.funded[q]) mask |= std::uint64_t{1} << q;
    }
    EXPECT_EQ(mask, best_set(c.instance, c.beliefs, std::nullopt).mask);
    for (std::size_t i = 0; i < c.instance.recommenders; ++i) {
      EXPECT_NEAR(pivot_payment(c.instance, c.beliefs, i), pivot_oracle(c.instance, c.beliefs, i), 1e-12);
      const TcompResult t = tcomp(c.instance, c.beliefs, i);
      EXPECT_TRUE(t.exact);
      EXPECT_NEAR(t.value, tcomp_vertex_oracle(c.instance, c.beliefs, i), 1e-12);
      EXPECT_GE(t.value, pivot_payment(c.instance, c.beliefs, i) - 1e-15);
    }
  }
}

TEST(VcgProperty, TruthIsExPostBestResponse) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const VcgCase c = random_vcg_case(rng, 4, 4, trial % 2 == 0);
    const std::size_t i = rng() % c.instance.recommenders;
    const double truth = vcg_expected_utility(c.instance, c.beliefs, i, c.beliefs.row(i));
    EXPECT_GE(truth, -1e-12);
    for (std::size_t q = 0; q < c.instance.borrowers; ++q) {
      BeliefProfile dev = c.beliefs;
      for (int k = 0; k <= 100; ++k) {
        dev(i, q) = k / 100.0;
        EXPECT_LE(vcg_expected_utility(c.instance, dev, i, c.beliefs.row(i)), truth + 1e-9);
      }
    }
  }
}

TEST(VcgProperty, RealizedUtilityNonNegativeWithRebate) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const VcgCase c = random_vcg_case(rng, 5, 6, true);
    const Allocation a = allocate_vcg(c.instance, c.beliefs);
    std::vector<std::size_t> funded;
    for (std::size_t q = 0; q < c.instance.borrowers; ++q) {
      if (a.funded[q]) funded.push_back(q);
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << funded.size()); ++mask) {
      OutcomeVector o(c.instance.borrowers);
      for (std::size_t k = 0; k < funded.size(); ++k) o[funded[k]] = (mask >> k) & 1U ? Outcome::Repaid : Outcome::Default;
      const SettlementResult s = settle_vcg(c.instance, c.beliefs, o);
      for (std::size_t i = 0; i < c.instance.recommenders; ++i) EXPECT_GE(s.realized_utility(i), 0.0);
    }
  }
}

TEST(VcgProperty, AlphaScalesPaymentsExactly) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const VcgCase full = random_vcg_case(rng, 4, 5, true);
    VcgInstance half = full.instance;
    half.alpha = 0.5;
    OutcomeVector o(full.instance.borrowers);
    const Allocation a = allocate_vcg(full.instance, full.beliefs);
    for (std::size_t q = 0; q < o.size(); ++q) {
      if (a.funded[q]) o[q] = rng() % 2 ? Outcome::Repaid : Outcome::Default;
    }
    const auto s1 = settle_vcg(full.instance, full.beliefs, o);
    const auto s2 = settle_vcg(half, full.beliefs, o);
    EXPECT_EQ(s1.allocation, s2.allocation);
    EXPECT_EQ(deficit(s2), 0.5 * deficit(s1));
  }
}

TEST(VcgModel, MatchesDirectUtility) {
  const auto inst = table_instance(true);
  const VcgModel model(inst);
  const auto p = table_beliefs();
  auto ctx = model.make_context();
  auto ws = model.make_workspace();
  model.prepare(1, p, ctx);
  const std::vector<double> mis{0.0, 1.0};
  BeliefProfile r = p;
  r(1, 0) = 0.0;
  r(1, 1) = 1.0;
  EXPECT_NEAR(model.utility(ctx, model.make_report(p.row(1), p.row(1)), ws), vcg_expected_utility(inst, p, 1, p.row(1)),
              1e-12);
  EXPECT_NEAR(model.utility(ctx, model.make_report(p.row(1), mis), ws), vcg_expected_utility(inst, r, 1, p.row(1)),
              1e-12);
}
