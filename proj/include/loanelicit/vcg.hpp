#pragma once

// VCG scoring mechanism for liquidity-constrained lending. Recommender i's
// reported value for lending to q is alpha * w_i * p_iq, the lender's
// threshold enters as K reserve borrowers valued at c by a reserve
// recommender, the welfare-maximizing top-K set is funded and each
// recommender pays the usual pivot.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "loanelicit/aggregation.hpp"
#include "loanelicit/interim.hpp"
#include "loanelicit/types.hpp"

namespace loanelicit {

struct VcgInstance {
  std::size_t recommenders = 1;
  std::size_t borrowers = 1;
  std::size_t liquidity = 1;
  // Reserve value; 0 disables the reserve borrowers.
  double reserve = 0.0;
  WeightVector weights = WeightVector::equal(1);
  double alpha = 1.0;
  bool tcomp_enabled = false;

  bool has_reserve() const noexcept { return reserve > 0.0; }
  // Index used for the reserve recommender in error reporting.
  std::size_t reserve_recommender() const noexcept { return recommenders; }
};

/// Enumeration limit for exact tcomp: borrowers plus reserve slots.
inline constexpr std::size_t kExactTcompLimit = 20;
inline constexpr double kWelfareTieTolerance = 1e-12;

inline void validate(const VcgInstance& inst) {
  if (inst.recommenders == 0 || inst.borrowers == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one recommender and one borrower");
  }
  if (inst.liquidity < 1 || inst.liquidity > inst.borrowers) {
    throw Error(ErrorCode::InvalidArgument, "liquidity K=" + std::to_string(inst.liquidity) + " must lie in [1, " +
                                                std::to_string(inst.borrowers) + "]");
  }
  if (!(inst.reserve >= 0.0 && inst.reserve < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "reserve threshold must lie in [0,1), got " + std::to_string(inst.reserve));
  }
  if (inst.weights.size() != inst.recommenders) {
    throw Error(ErrorCode::ArityMismatch, "weight vector has " + std::to_string(inst.weights.size()) +
                                              " entries for " + std::to_string(inst.recommenders) + " recommenders");
  }
  if (!(inst.alpha > 0.0) || !std::isfinite(inst.alpha)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be positive and finite");
  }
}

namespace detail {

inline void check_vcg_reports(const VcgInstance& inst, const BeliefProfile& reports) {
  if (reports.rows() != inst.recommenders || reports.cols() != inst.borrowers) {
    throw Error(ErrorCode::ShapeMismatch, "reports are " + std::to_string(reports.rows()) + "x" +
                                              std::to_string(reports.cols()) + ", expected " +
                                              std::to_string(inst.recommenders) + "x" +
                                              std::to_string(inst.borrowers));
  }
  validate_probabilities(reports);
}

inline void check_real_recommender(const VcgInstance& inst, std::size_t i) {
  if (i == inst.reserve_recommender()) {
    throw Error(ErrorCode::ReserveRecommenderHasNoPayment, "the reserve recommender neither pays nor is paid");
  }
  if (i > inst.recommenders) {
    throw Error(ErrorCode::InvalidArgument, "recommender index " + std::to_string(i) + " out of range");
  }
}

}  // namespace detail

/// Top-K selection over real borrowers and K reserve slots valued at c.
/// Reals beat reserves at equal score, lower indices beat higher ones.
/// `order` is scratch space.
inline Allocation select_top(std::span<const double> scores, std::size_t k, double c, bool has_reserve,
                             std::vector<std::size_t>& order) {
  Allocation a;
  a.funded.assign(scores.size(), false);
  order.resize(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });
  std::size_t taken = 0;
  for (std::size_t q : order) {
    if (taken == k) break;
    if (has_reserve && scores[q] < c) break;
    a.funded[q] = true;
    ++taken;
  }
  a.reserves_funded = has_reserve ? k - taken : 0;
  return a;
}

inline Allocation select_top(std::span<const double> scores, std::size_t k, double c, bool has_reserve) {
  std::vector<std::size_t> order;
  return select_top(scores, k, c, has_reserve, order);
}

/// Aggregate scores B_q = sum_i w_i p_iq.
inline std::vector<double> vcg_scores(const VcgInstance& inst, const BeliefProfile& reports) {
  std::vector<double> s(inst.borrowers, 0.0);
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    double total = 0.0;
    for (std::size_t i = 0; i < inst.recommenders; ++i) total += inst.weights[i] * reports(i, q);
    s[q] = total;
  }
  return s;
}

/// Scores with recommender i's contribution left out.
inline std::vector<double> others_scores(const VcgInstance& inst, const BeliefProfile& reports, std::size_t i) {
  std::vector<double> s(inst.borrowers, 0.0);
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    double total = 0.0;
    for (std::size_t j = 0; j < inst.recommenders; ++j) {
      if (j != i) total += inst.weights[j] * reports(j, q);
    }
    s[q] = total;
  }
  return s;
}

inline Allocation allocate_vcg(const VcgInstance& inst, const BeliefProfile& reports) {
  validate(inst);
  detail::check_vcg_reports(inst, reports);
  return select_top(vcg_scores(inst, reports), inst.liquidity, inst.reserve, inst.has_reserve());
}

/// Unscaled welfare of an allocation under the given per-borrower scores,
/// reserve slots included. Every welfare comparison goes through here so
/// that pivots and rebates are summed identically.
inline double welfare_of(std::span<const double> scores, const Allocation& a, double c) {
  double total = 0.0;
  for (std::size_t q = 0; q < scores.size(); ++q) {
    if (a.funded[q]) total += scores[q];
  }
  return total + static_cast<double>(a.reserves_funded) * c;
}

/// Allocation chosen with recommender i removed.
inline Allocation allocate_without(const VcgInstance& inst, const BeliefProfile& reports, std::size_t i) {
  validate(inst);
  detail::check_vcg_reports(inst, reports);
  detail::check_real_recommender(inst, i);
  return select_top(others_scores(inst, reports, i), inst.liquidity, inst.reserve, inst.has_reserve());
}

namespace detail {

inline double unscaled_pivot(std::span<const double> others, const Allocation& x, std::size_t k, double c,
                             bool has_reserve) {
  const Allocation without = select_top(others, k, c, has_reserve);
  return std::max(0.0, welfare_of(others, without, c) - welfare_of(others, x, c));
}

}  // namespace detail

/// Pivot payment paid by recommender i (alpha-scaled).
inline double pivot_payment(const VcgInstance& inst, const BeliefProfile& reports, std::size_t i) {
  validate(inst);
  detail::check_real_recommender(inst, i);
  detail::check_vcg_reports(inst, reports);
  const Allocation x = allocate_vcg(inst, reports);
  const std::vector<double> others = others_scores(inst, reports, i);
  return inst.alpha * detail::unscaled_pivot(others, x, inst.liquidity, inst.reserve, inst.has_reserve());
}

struct TcompResult {
  double value = 0.0;
  // False when the candidate sets were a swap neighborhood rather than
  // every subset.
  bool exact = true;
};

namespace detail {

// Worst-case unscaled pivot for recommender with weight w given others'
// scores. Candidate funded sets S are those some report of i can produce;
// welfare is linear in i's report, so it suffices to check that S is
// welfare-optimal (up to ties) under the vertex report 1_S.
inline TcompResult unscaled_tcomp(std::span<const double> others, double w, std::size_t k, double c,
                                  bool has_reserve) {
  const std::size_t m = others.size();
  const Allocation without = select_top(others, k, c, has_reserve);
  const double baseline = welfare_of(others, without, c);
  if (w == 0.0) return {0.0, true};

  std::vector<double> vertex(m);
  std::vector<std::size_t> order;
  double worst = baseline;
  auto consider = [&](const std::vector<bool>& set) {
    const std::size_t size = static_cast<std::size_t>(std::count(set.begin(), set.end(), true));
    if (size > k || (!has_reserve && size != k)) return;
    for (std::size_t q = 0; q < m; ++q) vertex[q] = others[q] + (set[q] ? w : 0.0);
    const Allocation best = select_top(vertex, k, c, has_reserve, order);
    Allocation target;
    target.funded = set;
    target.reserves_funded = has_reserve ? k - size : 0;
    if (welfare_of(vertex, target, c) < welfare_of(vertex, best, c) - kWelfareTieTolerance) return;
    worst = std::min(worst, welfare_of(others, target, c));
  };

  const std::size_t slots = m + (has_reserve ? k : 0);
  if (slots <= kExactTcompLimit) {
    // Every subset of at most k real borrowers.
    std::vector<bool> set(m, false);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
      if (static_cast<std::size_t>(std::popcount(mask)) > k) continue;
      for (std::size_t q = 0; q < m; ++q) set[q] = (mask >> q) & 1U;
      consider(set);
    }
    return {std::max(0.0, baseline - worst), true};
  }

  // Neighborhood of the allocation without i: drop one, add one, swap one.
  std::vector<bool> base = without.funded;
  consider(base);
  for (std::size_t a = 0; a < m; ++a) {
    std::vector<bool> s = base;
    s[a] = !s[a];
    consider(s);
    for (std::size_t b = a + 1; b < m; ++b) {
      if (base[a] == base[b]) continue;
      std::vector<bool> sw = base;
      sw[a] = !sw[a];
      sw[b] = !sw[b];
      consider(sw);
    }
  }
  return {std::max(0.0, baseline - worst), false};
}

}  // namespace detail

/// Report-independent rebate: the largest pivot recommender i could be
/// charged given the others' reports. Row i of `reports` is ignored.
inline TcompResult tcomp(const VcgInstance& inst, const BeliefProfile& reports, std::size_t i) {
  validate(inst);
  detail::check_real_recommender(inst, i);
  detail::check_vcg_reports(inst, reports);
  TcompResult r = detail::unscaled_tcomp(others_scores(inst, reports, i), inst.weights[i], inst.liquidity,
                                         inst.reserve, inst.has_reserve());
  r.value *= inst.alpha;
  return r;
}

inline SettlementResult settle_vcg(const VcgInstance& inst, const BeliefProfile& reports,
                                   const OutcomeVector& outcomes) {
  SettlementResult r;
  r.allocation = allocate_vcg(inst, reports);
  check_outcomes(r.allocation, outcomes);
  const std::size_t n = inst.recommenders;
  r.immediate.assign(n, 0.0);
  r.tcomp.assign(n, 0.0);
  r.contingent.assign(n, std::vector<double>(inst.borrowers, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> others = others_scores(inst, reports, i);
    r.immediate[i] =
        inst.alpha * detail::unscaled_pivot(others, r.allocation, inst.liquidity, inst.reserve, inst.has_reserve());
    if (inst.tcomp_enabled) {
      r.tcomp[i] = inst.alpha * detail::unscaled_tcomp(others, inst.weights[i], inst.liquidity, inst.reserve,
                                                       inst.has_reserve())
                                    .value;
    }
    for (std::size_t q = 0; q < inst.borrowers; ++q) {
      if (r.allocation.funded[q] && *outcomes[q] == Outcome::Repaid) r.contingent[i][q] = inst.alpha * inst.weights[i];
    }
  }
  return r;
}

/// Expected utility of recommender i over own beliefs, everyone reporting
/// `reports`: value of the funded set minus pivot, plus rebate if enabled.
inline double vcg_expected_utility(const VcgInstance& inst, const BeliefProfile& reports, std::size_t i,
                                   std::span<const double> belief_row) {
  validate(inst);
  detail::check_real_recommender(inst, i);
  if (belief_row.size() != inst.borrowers) throw Error(ErrorCode::ShapeMismatch, "belief row length mismatch");
  const Allocation x = allocate_vcg(inst, reports);
  const std::vector<double> others = others_scores(inst, reports, i);
  double value = 0.0;
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (x.funded[q]) value += inst.weights[i] * belief_row[q];
  }
  double u = value - detail::unscaled_pivot(others, x, inst.liquidity, inst.reserve, inst.has_reserve());
  if (inst.tcomp_enabled) {
    u += detail::unscaled_tcomp(others, inst.weights[i], inst.liquidity, inst.reserve, inst.has_reserve()).value;
  }
  return inst.alpha * u;
}

/// Monte Carlo model for the interim engine.
class VcgModel {
 public:
  explicit VcgModel(VcgInstance inst) : inst_(std::move(inst)) { validate(inst_); }

  struct Context {
    std::size_t i = 0;
    std::vector<double> others;
    double baseline = 0.0;
    double rebate = 0.0;
  };
  struct Report {
    std::vector<double> belief, report;
  };
  struct Workspace {
    std::vector<double> scores;
    std::vector<std::size_t> order;
  };

  std::size_t recommenders() const { return inst_.recommenders; }
  std::size_t borrowers() const { return inst_.borrowers; }
  const VcgInstance& instance() const { return inst_; }

  Context make_context() const {
    Context ctx;
    ctx.others.assign(inst_.borrowers, 0.0);
    return ctx;
  }
  Workspace make_workspace() const { return {std::vector<double>(inst_.borrowers), {}}; }

  Report make_report(std::span<const double> belief, std::span<const double> report) const {
    return {{belief.begin(), belief.end()}, {report.begin(), report.end()}};
  }

  void prepare(std::size_t i, const BeliefProfile& profile, Context& ctx) const {
    ctx.i = i;
    for (std::size_t q = 0; q < inst_.borrowers; ++q) {
      double total = 0.0;
      for (std::size_t j = 0; j < inst_.recommenders; ++j) {
        if (j != i) total += inst_.weights[j] * profile(j, q);
      }
      ctx.others[q] = total;
    }
    const Allocation without = select_top(ctx.others, inst_.liquidity, inst_.reserve, inst_.has_reserve());
    ctx.baseline = welfare_of(ctx.others, without, inst_.reserve);
    ctx.rebate = inst_.tcomp_enabled ? detail::unscaled_tcomp(ctx.others, inst_.weights[i], inst_.liquidity,
                                                              inst_.reserve, inst_.has_reserve())
                                           .value
                                     : 0.0;
  }

  double utility(const Context& ctx, const Report& r, Workspace& ws) const {
    const double w = inst_.weights[ctx.i];
    for (std::size_t q = 0; q < inst_.borrowers; ++q) ws.scores[q] = ctx.others[q] + w * r.report[q];
    const Allocation x = select_top(ws.scores, inst_.liquidity, inst_.reserve, inst_.has_reserve(), ws.order);
    double value = 0.0;
    for (std::size_t q = 0; q < inst_.borrowers; ++q) {
      if (x.funded[q]) value += w * r.belief[q];
    }
    const double pivot = std::max(0.0, ctx.baseline - welfare_of(ctx.others, x, inst_.reserve));
    return inst_.alpha * (value - pivot + ctx.rebate);
  }

 private:
  VcgInstance inst_;
};

}  // namespace loanelicit
