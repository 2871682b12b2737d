#pragma once

// Truncated Winkler elicitation for n recommenders and m borrowers: fund
// every borrower whose aggregate report clears the threshold, and pay each
// recommender the log-Winkler score centred at their marginal threshold.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loanelicit/aggregation.hpp"
#include "loanelicit/interim.hpp"
#include "loanelicit/scoring.hpp"
#include "loanelicit/types.hpp"

namespace loanelicit {

struct WinklerInstance {
  std::size_t recommenders = 1;
  std::size_t borrowers = 1;
  ScoreThreshold threshold{0.5};
  Aggregator aggregator = WeightedLinear{WeightVector::equal(1)};
  // When set, only the `liquidity` highest-aggregate borrowers among those
  // clearing the threshold are funded. Unset means unconstrained lending.
  std::optional<std::size_t> liquidity;
};

inline void validate(const WinklerInstance& inst) {
  if (inst.recommenders == 0 || inst.borrowers == 0) {
    throw Error(ErrorCode::InvalidArgument, "need at least one recommender and one borrower");
  }
  if (arity(inst.aggregator) != inst.recommenders) {
    throw Error(ErrorCode::ArityMismatch, "aggregator arity " + std::to_string(arity(inst.aggregator)) +
                                              " does not match " + std::to_string(inst.recommenders) +
                                              " recommenders");
  }
  if (inst.liquidity && *inst.liquidity == 0) throw Error(ErrorCode::InvalidArgument, "liquidity must be >= 1");
}

inline void check_reports(const BeliefProfile& reports, std::size_t n, std::size_t m) {
  if (reports.rows() != n || reports.cols() != m) {
    throw Error(ErrorCode::ShapeMismatch, "reports are " + std::to_string(reports.rows()) + "x" +
                                              std::to_string(reports.cols()) + ", expected " + std::to_string(n) +
                                              "x" + std::to_string(m));
  }
  validate_probabilities(reports);
}

/// Threshold matrix c_iq. `kCannotSwing` marks a zero-weight recommender.
using MarginalThresholdMatrix = BasicMatrix<struct ThresholdTag>;
inline constexpr double kCannotSwing = std::numeric_limits<double>::infinity();

inline std::vector<double> winkler_aggregates(const WinklerInstance& inst, const BeliefProfile& reports) {
  std::vector<double> b(inst.borrowers);
  for (std::size_t q = 0; q < inst.borrowers; ++q) b[q] = aggregate(inst.aggregator, reports.column(q));
  return b;
}

/// Funding rule given aggregates: B_q > c, optionally capped to the
/// highest aggregates (lower index wins ties).
inline Allocation fund_by_threshold(std::span<const double> aggregates, double c,
                                    std::optional<std::size_t> liquidity) {
  Allocation a;
  a.funded.assign(aggregates.size(), false);
  std::vector<std::size_t> eligible;
  for (std::size_t q = 0; q < aggregates.size(); ++q) {
    if (aggregates[q] > c) eligible.push_back(q);
  }
  if (liquidity && eligible.size() > *liquidity) {
    std::stable_sort(eligible.begin(), eligible.end(),
                     [&](std::size_t x, std::size_t y) { return aggregates[x] > aggregates[y]; });
    eligible.resize(*liquidity);
  }
  for (std::size_t q : eligible) a.funded[q] = true;
  return a;
}

inline Allocation allocate_winkler(const WinklerInstance& inst, const BeliefProfile& reports) {
  validate(inst);
  check_reports(reports, inst.recommenders, inst.borrowers);
  const std::vector<double> b = winkler_aggregates(inst, reports);
  return fund_by_threshold(b, inst.threshold.value(), inst.liquidity);
}

namespace detail {

inline double linear_threshold(double c, double others_sum, double w) {
  if (w == 0.0) return kCannotSwing;
  return std::clamp((c - others_sum) / w, 0.0, 1.0);
}

// Infimum report that pushes the aggregate above c, by bisection on one
// coordinate of a monotone aggregator.
inline double bisect_threshold(const MonotoneCustom& agg, std::vector<double> column, std::size_t i, double c) {
  column[i] = 0.0;
  if (agg.fn(column) > c) return 0.0;
  column[i] = 1.0;
  if (!(agg.fn(column) > c)) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    column[i] = mid;
    if (agg.fn(column) > c) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace detail

inline double marginal_threshold(const WinklerInstance& inst, const BeliefProfile& reports, std::size_t i,
                                 std::size_t q) {
  const double c = inst.threshold.value();
  if (const auto* lin = std::get_if<WeightedLinear>(&inst.aggregator)) {
    double others = 0.0;
    for (std::size_t j = 0; j < inst.recommenders; ++j) {
      if (j != i) others += lin->weights[j] * reports(j, q);
    }
    return detail::linear_threshold(c, others, lin->weights[i]);
  }
  return detail::bisect_threshold(std::get<MonotoneCustom>(inst.aggregator), reports.column(q), i, c);
}

inline MarginalThresholdMatrix marginal_thresholds(const WinklerInstance& inst, const BeliefProfile& reports) {
  validate(inst);
  check_reports(reports, inst.recommenders, inst.borrowers);
  MarginalThresholdMatrix t(inst.recommenders, inst.borrowers);
  for (std::size_t i = 0; i < inst.recommenders; ++i) {
    for (std::size_t q = 0; q < inst.borrowers; ++q) t(i, q) = marginal_threshold(inst, reports, i, q);
  }
  return t;
}

/// Winkler log score centred at a marginal threshold, including the
/// degenerate thresholds: 0 pays the repayment indicator, 1 and the
/// zero-weight sentinel pay nothing.
inline double winkler_marginal_score(double threshold, double report, Outcome o) {
  if (threshold == kCannotSwing || threshold >= 1.0) return 0.0;
  if (threshold <= 0.0) return indicator(o);
  return score(rules::WinklerOf{BaseRule::Logarithmic, ScoreThreshold(threshold)}, report, o);
}

inline double winkler_marginal_expected(double threshold, double belief, double report) {
  if (threshold == kCannotSwing || threshold >= 1.0) return 0.0;
  if (threshold <= 0.0) return belief;
  return detail::winkler_log_expected(threshold, std::log(threshold), std::log(1.0 - threshold), belief, report,
                                      std::log(report), std::log(1.0 - report));
}

inline SettlementResult settle_winkler(const WinklerInstance& inst, const BeliefProfile& reports,
                                       const OutcomeVector& outcomes) {
  SettlementResult r;
  r.allocation = allocate_winkler(inst, reports);
  check_outcomes(r.allocation, outcomes);
  const MarginalThresholdMatrix t = marginal_thresholds(inst, reports);
  const std::size_t n = inst.recommenders;
  r.immediate.assign(n, 0.0);
  r.tcomp.assign(n, 0.0);
  r.contingent.assign(n, std::vector<double>(inst.borrowers, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < inst.borrowers; ++q) {
      if (r.allocation.funded[q]) r.contingent[i][q] = winkler_marginal_score(t(i, q), reports(i, q), *outcomes[q]);
    }
  }
  return r;
}

/// Expected utility of recommender i over their own beliefs `belief_row`,
/// everyone reporting `reports`. May be -inf when a funded report of 0 or 1
/// meets an outcome i considers possible.
inline double winkler_expected_utility(const WinklerInstance& inst, const BeliefProfile& reports, std::size_t i,
                                       std::span<const double> belief_row) {
  const Allocation a = allocate_winkler(inst, reports);
  if (belief_row.size() != inst.borrowers) throw Error(ErrorCode::ShapeMismatch, "belief row length mismatch");
  double total = 0.0;
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (!a.funded[q]) continue;
    total += winkler_marginal_expected(marginal_threshold(inst, reports, i, q), belief_row[q], reports(i, q));
  }
  return total;
}

/// Monte Carlo model for the interim engine. The common case (linear
/// aggregator, no liquidity cap) decides each borrower independently from
/// the co-recommenders' partial sum.
class WinklerModel {
 public:
  explicit WinklerModel(WinklerInstance inst) : inst_(std::move(inst)) {
    validate(inst_);
    if (const auto* lin = std::get_if<WeightedLinear>(&inst_.aggregator)) {
      linear_ = true;
      weights_.assign(lin->weights.values().begin(), lin->weights.values().end());
    }
    fast_ = linear_ && !inst_.liquidity;
  }

  struct Context {
    std::size_t i = 0;
    std::vector<double> others_sum;
    std::vector<double> t, ln_t, ln_1mt;
    BeliefProfile profile;
  };
  struct Report {
    std::vector<double> belief, report, ln_r, ln_1mr;
  };
  struct Workspace {
    std::vector<double> aggregates;
    std::vector<double> column;
  };

  std::size_t recommenders() const { return inst_.recommenders; }
  std::size_t borrowers() const { return inst_.borrowers; }
  const WinklerInstance& instance() const { return inst_; }

  Context make_context() const {
    Context ctx;
    const std::size_t m = inst_.borrowers;
    ctx.others_sum.assign(m, 0.0);
    ctx.t.assign(m, 0.0);
    ctx.ln_t.assign(m, 0.0);
    ctx.ln_1mt.assign(m, 0.0);
    return ctx;
  }

  Workspace make_workspace() const { return {std::vector<double>(inst_.borrowers), {}}; }

  Report make_report(std::span<const double> belief, std::span<const double> report) const {
    Report r;
    r.belief.assign(belief.begin(), belief.end());
    r.report.assign(report.begin(), report.end());
    for (double p : report) {
      r.ln_r.push_back(std::log(p));
      r.ln_1mr.push_back(std::log(1.0 - p));
    }
    return r;
  }

  void prepare(std::size_t i, const BeliefProfile& profile, Context& ctx) const {
    ctx.i = i;
    const double c = inst_.threshold.value();
    for (std::size_t q = 0; q < inst_.borrowers; ++q) {
      if (linear_) {
        double others = 0.0;
        for (std::size_t j = 0; j < inst_.recommenders; ++j) {
          if (j != i) others += weights_[j] * profile(j, q);
        }
        ctx.others_sum[q] = others;
        ctx.t[q] = detail::linear_threshold(c, others, weights_[i]);
      } else {
        ctx.t[q] = marginal_threshold(inst_, profile, i, q);
      }
      const double t = ctx.t[q];
      if (t > 0.0 && t < 1.0) {
        ctx.ln_t[q] = std::log(t);
        ctx.ln_1mt[q] = std::log(1.0 - t);
      }
    }
    if (!fast_) ctx.profile = profile;
  }

  double utility(const Context& ctx, const Report& r, Workspace& ws) const {
    const std::size_t m = inst_.borrowers;
    const double c = inst_.threshold.value();
    if (fast_) {
      const double w = weights_[ctx.i];
      double total = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        if (!(ctx.others_sum[q] + w * r.report[q] > c)) continue;
        total += expected_at(ctx, q, r);
      }
      return total;
    }
    for (std::size_t q = 0; q < m; ++q) {
      if (linear_) {
        ws.aggregates[q] = ctx.others_sum[q] + weights_[ctx.i] * r.report[q];
      } else {
        ws.column = ctx.profile.column(q);
        ws.column[ctx.i] = r.report[q];
        ws.aggregates[q] = aggregate(inst_.aggregator, ws.column);
      }
    }
    const Allocation a = fund_by_threshold(ws.aggregates, c, inst_.liquidity);
    double total = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      if (a.funded[q]) total += expected_at(ctx, q, r);
    }
    return total;
  }

 private:
  double expected_at(const Context& ctx, std::size_t q, const Report& r) const {
    const double t = ctx.t[q];
    if (t == kCannotSwing || t >= 1.0) return 0.0;
    if (t <= 0.0) return r.belief[q];
    return detail::winkler_log_expected(t, ctx.ln_t[q], ctx.ln_1mt[q], r.belief[q], r.report[q], r.ln_r[q],
                                        r.ln_1mr[q]);
  }

  WinklerInstance inst_;
  bool linear_ = false;
  bool fast_ = false;
  std::vector<double> weights_;
};

inline InterimEstimate interim_utility_winkler(const WinklerInstance& inst, std::size_t i,
                                               std::span<const double> belief_row,
                                               std::span<const double> report_row, const PriorSpec& prior,
                                               const MonteCarloOptions& opts) {
  return interim_utility(WinklerModel(inst), i, belief_row, report_row, prior, opts);
}

}  // namespace loanelicit
