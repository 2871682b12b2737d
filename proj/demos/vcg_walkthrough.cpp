// Walks one small VCG round end to end: scores, allocation, pivot payments,
// rebates and realized utilities for every outcome of the funded borrowers.

#include <cstdio>

#include "loanelicit/vcg.hpp"

using namespace loanelicit;

int main() {
  VcgInstance inst;
  inst.recommenders = 3;
  inst.borrowers = 2;
  inst.liquidity = 1;
  inst.reserve = 0.5;
  inst.weights = WeightVector::equal(3);
  inst.tcomp_enabled = true;

  const auto reports = BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}});
  validate(inst);

  const auto scores = vcg_scores(inst, reports);
  const Allocation alloc = allocate_vcg(inst, reports);
  std::printf("scores: %.6f %.6f  reserve %.2f\n", scores[0], scores[1], inst.reserve);
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    std::printf("borrower %zu: %s\n", q + 1, alloc.funded[q] ? "funded" : "not funded");
  }
  std::printf("reserve slots used: %zu\n\n", alloc.reserves_funded);

  for (std::size_t i = 0; i < inst.recommenders; ++i) {
    const double t = pivot_payment(inst, reports, i);
    const TcompResult r = tcomp(inst, reports, i);
    std::printf("recommender %zu: pivot %.6f  rebate %.6f%s  expected utility %.6f\n", i + 1, t, r.value,
                r.exact ? "" : " (approximate)", vcg_expected_utility(inst, reports, i, reports.row(i)));
  }

  std::vector<std::size_t> funded;
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (alloc.funded[q]) funded.push_back(q);
  }
  std::printf("\nrealized utilities by outcome:\n");
  for (std::size_t mask = 0; mask < (std::size_t{1} << funded.size()); ++mask) {
    OutcomeVector outcomes(inst.borrowers);
    for (std::size_t k = 0; k < funded.size(); ++k) {
      outcomes[funded[k]] = (mask >> k) & 1U ? Outcome::Repaid : Outcome::Default;
    }
    const SettlementResult s = settle_vcg(inst, reports, outcomes);
    std::printf(" ");
    for (std::size_t q : funded) std::printf(" b%zu=%s", q + 1, *outcomes[q] == Outcome::Repaid ? "repaid" : "default");
    std::printf(" ->");
    for (std::size_t i = 0; i < inst.recommenders; ++i) std::printf(" %.6f", s.realized_utility(i));
    std::printf("  deficit %.6f\n", deficit(s));
  }
  return 0;
}
