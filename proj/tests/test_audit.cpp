#include <gtest/gtest.h>

#include "loanelicit/audit.hpp"

using namespace loanelicit;

namespace {

WinklerInstance equal_winkler(std::size_t n, std::size_t m, double c, std::optional<std::size_t> k = std::nullopt) {
  return WinklerInstance{n, m, ScoreThreshold(c), WeightedLinear{WeightVector::equal(n)}, k};
}

VcgInstance equal_vcg(std::size_t n, std::size_t m, std::size_t k, double c, bool tcomp_enabled) {
  VcgInstance inst;
  inst.recommenders = n;
  inst.borrowers = m;
  inst.liquidity = k;
  inst.reserve = c;
  inst.weights = WeightVector::equal(n);
  inst.tcomp_enabled = tcomp_enabled;
  return inst;
}

priors::ProductGrid small_grid(std::size_t n, std::size_t m, std::vector<double> support) {
  priors::ProductGrid g;
  g.rows = n;
  g.cols = m;
  g.support.assign(n * m, support);
  return g;
}

// Exact interim utility over a product-grid prior by enumerating every
// co-recommender profile.
template <class F>
double enumerate_interim(std::size_t n, std::size_t m, std::size_t i, const std::vector<double>& support,
                         const std::vector<double>& own, F utility) {
  const std::size_t cells = (n - 1) * m;
  std::size_t total = 1;
  for (std::size_t c = 0; c < cells; ++c) total *= support.size();
  double sum = 0.0;
  BeliefProfile p(n, m);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t q = 0; q < m; ++q) {
        if (j == i) {
          p(j, q) = own[q];
        } else {
          p(j, q) = support[rest % support.size()];
          rest /= support.size();
        }
      }
    }
    sum += utility(p);
  }
  return sum / static_cast<double>(total);
}

}  // namespace

TEST(Interim, WinklerMonteCarloAgreesWithEnumeration) {
  const auto inst = equal_winkler(3, 2, 0.5);
  const std::vector<double> support{0.2, 0.6, 0.9};
  const std::vector<double> own{0.55, 0.8};
  const std::vector<double> report{0.3, 0.8};
  const double exact_truth = enumerate_interim(3, 2, 0, support, own, [&](const BeliefProfile& p) {
    return winkler_expected_utility(inst, p, 0, own);
  });
  const double exact_mis = enumerate_interim(3, 2, 0, support, own, [&](const BeliefProfile& p) {
    BeliefProfile r = p;
    r.set_row(0, report);
    return winkler_expected_utility(inst, r, 0, own);
  });
  MonteCarloOptions mc;
  mc.samples = 1000000;
  mc.seed = 3;
  mc.workers = 4;
  const auto cmp = compare_reports(WinklerModel(inst), 0, own, own, {report}, small_grid(3, 2, support), mc);
  EXPECT_NEAR(cmp.truth.mean, exact_truth, 3 * cmp.truth.std_error);
  EXPECT_NEAR(cmp.misreports[0].misreport.mean, exact_mis, 3 * cmp.misreports[0].misreport.std_error);
  EXPECT_NEAR(cmp.misreports[0].mean_gain_of_truth, exact_truth - exact_mis, 3 * cmp.misreports[0].std_error + 1e-12);
}

TEST(Interim, VcgMonteCarloAgreesWithEnumeration) {
  const auto inst = equal_vcg(3, 2, 1, 0.5, true);
  const std::vector<double> support{0.1, 0.5, 0.8};
  const std::vector<double> own{0.6, 0.45};
  const double exact = enumerate_interim(3, 2, 0, support, own, [&](const BeliefProfile& p) {
    return vcg_expected_utility(inst, p, 0, own);
  });
  MonteCarloOptions mc;
  mc.samples = 200000;
  mc.seed = 4;
  const auto est = interim_utility(VcgModel(inst), 0, own, own, small_grid(3, 2, support), mc);
  EXPECT_NEAR(est.mean, exact, 3 * est.std_error);
}

TEST(Interim, DeterministicAcrossWorkerCounts) {
  const auto inst = equal_winkler(4, 2, 0.5);
  const std::vector<double> own{0.3, 0.7};
  const std::vector<std::vector<double>> mis{{0.2, 0.7}, {0.3, 0.9}};
  MonteCarloOptions mc;
  mc.samples = 30000;
  mc.seed = 9;
  mc.workers = 1;
  const auto a = compare_reports(WinklerModel(inst), 0, own, own, mis, priors::UniformIID{}, mc);
  mc.workers = 3;
  const auto b = compare_reports(WinklerModel(inst), 0, own, own, mis, priors::UniformIID{}, mc);
  EXPECT_EQ(a.truth.mean, b.truth.mean);
  EXPECT_EQ(a.truth.std_error, b.truth.std_error);
  for (std::size_t r = 0; r < mis.size(); ++r) {
    EXPECT_EQ(a.misreports[r].mean_gain_of_truth, b.misreports[r].mean_gain_of_truth);
    EXPECT_EQ(a.misreports[r].std_error, b.misreports[r].std_error);
  }
}

TEST(Interim, DegeneratePriorUsesOneSample) {
  const auto inst = equal_winkler(3, 2, 0.5, 1);
  const auto p = BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}});
  const auto est = interim_utility(WinklerModel(inst), 1, p.row(1), p.row(1), priors::DegenerateAt{p}, {});
  EXPECT_EQ(est.samples, 1u);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_DOUBLE_EQ(est.mean, winkler_expected_utility(inst, p, 1, p.row(1)));
}

TEST(Interim, InputErrors) {
  const auto inst = equal_winkler(2, 2, 0.5);
  const std::vector<double> own{0.5, 0.5};
  const std::vector<double> bad{0.5};
  EXPECT_THROW(interim_utility(WinklerModel(inst), 2, own, own, priors::UniformIID{}, {}), Error);
  EXPECT_THROW(interim_utility(WinklerModel(inst), 0, bad, bad, priors::UniformIID{}, {}), Error);
  MonteCarloOptions none;
  none.samples = 0;
  EXPECT_THROW(interim_utility(WinklerModel(inst), 0, own, own, priors::UniformIID{}, none), Error);
  EXPECT_THROW(interim_utility(WinklerModel(inst), 0, own, own, priors::BetaIID{0.0, 1.0}, {}), Error);
}

TEST(Misreports, GeneratorsSkipTruthAndTagShifts) {
  const std::vector<double> truth{0.3, 0.6};
  const auto g = generate_misreports(strategies::SingleCoordinateGrid{11}, truth);
  EXPECT_EQ(g.size(), 2u * 11u - 2u);  // both true values lie on the grid
  for (const auto& m : g) EXPECT_NE(m.row, truth);
  const auto s = generate_misreports(strategies::EqualShift{0.1}, truth);
  ASSERT_FALSE(s.empty());
  for (const auto& m : s) EXPECT_TRUE(m.equal_shift);
  const auto r = generate_misreports(strategies::FullRowRandom{50, 1}, truth);
  EXPECT_EQ(r.size(), 50u);
  EXPECT_TRUE(is_equal_shift(truth, std::vector<double>{0.4, 0.7}));
  EXPECT_FALSE(is_equal_shift(truth, std::vector<double>{0.4, 0.6}));
}

TEST(Audit, ClassifyUsesTwoStandardErrors) {
  PairedComparison pc;
  pc.std_error = 0.01;
  pc.mean_gain_of_truth = 0.03;
  EXPECT_EQ(classify(pc, 1e-12), Comparison::Loss);
  pc.mean_gain_of_truth = 0.015;
  EXPECT_EQ(classify(pc, 1e-12), Comparison::Tie);
  pc.mean_gain_of_truth = -0.05;
  EXPECT_EQ(classify(pc, 1e-12), Comparison::Gain);
}

TEST(Audit, CounterexampleReproduces) {
  const auto r = reproduce_counterexample(capped_winkler_counterexample());
  EXPECT_LT(r.max_abs_error, 0.005);
  EXPECT_TRUE(r.honest_allocation.funded[0]);
  EXPECT_TRUE(r.misreport_allocation.funded[1]);
  EXPECT_GT(r.misreport_utility[1], r.honest_utility[1]);

  auto wrong = capped_winkler_counterexample();
  wrong.honest_reference[0] = 0.2;
  try {
    reproduce_counterexample(wrong);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ReproductionMismatch);
  }
}

TEST(Audit, CappedWinklerWeakEpicWitness) {
  const auto spec = capped_winkler_counterexample();
  const auto inst = equal_winkler(3, 2, 0.5, 1);
  SearchOptions so;
  so.desideratum = Desideratum::WeakEPIC;
  const auto v = best_response_search(WinklerModel(inst), 1, spec.beliefs.row(1), priors::DegenerateAt{spec.beliefs},
                                      {strategies::SingleCoordinateGrid{101}}, {}, so);
  EXPECT_EQ(v.verdict, Verdict::Violation);
  ASSERT_TRUE(v.witness);
  EXPECT_EQ(v.witness->report_row[0], 0.0);
  EXPECT_EQ(v.witness->report_row[1], 0.85);
  EXPECT_TRUE(v.witness->co_beliefs);
  EXPECT_NEAR(v.witness->gain, winkler_expected_utility(inst, [&] {
    BeliefProfile r = spec.beliefs;
    r(1, 0) = 0.0;
    return r;
  }(), 1, spec.beliefs.row(1)) - winkler_expected_utility(inst, spec.beliefs, 1, spec.beliefs.row(1)), 1e-12);
}

TEST(Audit, ExPostSearchNeedsPointPrior) {
  const auto inst = equal_winkler(2, 1, 0.5);
  SearchOptions so;
  so.desideratum = Desideratum::WeakEPIC;
  const std::vector<double> own{0.5};
  EXPECT_THROW(best_response_search(WinklerModel(inst), 0, own, priors::UniformIID{}, {strategies::EqualShift{0.1}}, {}, so),
               Error);
}

TEST(Audit, StrictEpicTreatsTiesAsViolations) {
  // A recommender below every threshold is indifferent among unfunded reports.
  const auto inst = equal_winkler(2, 1, 0.6);
  const auto p = BeliefProfile::from_rows({{0.1}, {0.1}});
  SearchOptions so;
  so.desideratum = Desideratum::StrictEPIC;
  const auto v = best_response_search(WinklerModel(inst), 0, p.row(0), priors::DegenerateAt{p},
                                      {strategies::SingleCoordinateGrid{11}}, {}, so);
  EXPECT_EQ(v.verdict, Verdict::Violation);
  EXPECT_GT(v.stats.ties, 0u);
  EXPECT_EQ(v.stats.violations, 0u);
  so.desideratum = Desideratum::WeakEPIC;
  EXPECT_EQ(best_response_search(WinklerModel(inst), 0, p.row(0), priors::DegenerateAt{p},
                                 {strategies::SingleCoordinateGrid{11}}, {}, so)
                .verdict,
            Verdict::Pass);
}

TEST(Audit, NoVetoBoundary) {
  const auto two = grain_of_no_veto(equal_winkler(2, 2, 0.6), priors::UniformIID{}, 20000, 1);
  EXPECT_EQ(two.zero_pairs.size(), 4u);
  EXPECT_FALSE(no_veto_possible(WeightVector::equal(2), 0, 0.6));
  const auto three = grain_of_no_veto(equal_winkler(3, 2, 0.5), priors::UniformIID{}, 20000, 1);
  EXPECT_TRUE(three.zero_pairs.empty());
  // P[(x + y)/3 > 0.5] for x, y uniform is 1/8.
  for (double v : three.probability.values()) EXPECT_NEAR(v, 0.125, 0.01);
  EXPECT_TRUE(no_veto_possible(WeightVector::equal(3), 0, 0.5));
}

TEST(Audit, AllocativeEfficiencyAndIr) {
  Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    const VcgCase c = random_vcg_case(rng, 4, 6, true);
    EXPECT_EQ(audit_allocative_efficiency(c.instance, c.beliefs).verdict, Verdict::Pass);
    EXPECT_EQ(audit_ex_post_ir(c.instance, c.beliefs).verdict, Verdict::Pass);
    EXPECT_EQ(audit_strong_ex_post_ir(c.instance, c.beliefs).verdict, Verdict::Pass);
  }
  // Without the rebate, a pivotal recommender can lose on default.
  const auto inst = equal_vcg(3, 2, 1, 0.5, false);
  const auto p = BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}});
  EXPECT_EQ(audit_strong_ex_post_ir(inst, p).verdict, Verdict::Violation);
}

TEST(Audit, WeightMonotonicity) {
  const auto inst = equal_vcg(3, 2, 1, 0.5, false);
  const auto p = BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}});
  const auto r = weight_monotonicity(inst, p, 0, 1.0 / 3.0, 0.5);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.strictly_increases);
  EXPECT_THROW(weight_monotonicity(inst, p, 0, 0.5, 0.4), Error);
  EXPECT_EQ(weight_monotonicity_check(100, 4).verdict, Verdict::Pass);
}

TEST(Audit, DeterministicVerdicts) {
  const auto inst = equal_vcg(4, 2, 1, 0.5, true);
  const std::vector<double> own{0.3, 0.7};
  MonteCarloOptions mc;
  mc.samples = 5000;
  mc.seed = 77;
  const std::vector<MisreportStrategy> s{strategies::SingleCoordinateGrid{6}, strategies::FullRowRandom{10, 3}};
  const auto a = best_response_search(VcgModel(inst), 0, own, priors::UniformIID{}, s, mc);
  const auto b = best_response_search(VcgModel(inst), 0, own, priors::UniformIID{}, s, mc);
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.stats.max_gain, b.stats.max_gain);
  EXPECT_EQ(a.stats.std_error, b.stats.std_error);
  EXPECT_EQ(a.stats.truth_utility, b.stats.truth_utility);
}
