#pragma once

// Incentive audits: misreport generation, best-response search with a
// two-standard-error decision rule, no-veto probabilities, brute-force
// efficiency, IR checks, weight monotonicity and the capped-liquidity
// Winkler counterexample.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "loanelicit/aggregation.hpp"
#include "loanelicit/interim.hpp"
#include "loanelicit/prior.hpp"
#include "loanelicit/vcg.hpp"
#include "loanelicit/winkler.hpp"

namespace loanelicit {

enum class Desideratum { AllocEff, WeakEPIC, StrictEPIC, StrictIIC, ExPostIR, StrongExPostIR, WeightMonotonicity };

inline const char* to_string(Desideratum d) {
  switch (d) {
    case Desideratum::AllocEff: return "alloc-eff";
    case Desideratum::WeakEPIC: return "weak-epic";
    case Desideratum::StrictEPIC: return "strict-epic";
    case Desideratum::StrictIIC: return "strict-iic";
    case Desideratum::ExPostIR: return "ex-post-ir";
    case Desideratum::StrongExPostIR: return "strong-ex-post-ir";
    case Desideratum::WeightMonotonicity: return "weight-monotonicity";
  }
  return "unknown";
}

inline std::optional<Desideratum> parse_desideratum(const std::string& name) {
  for (Desideratum d : {Desideratum::AllocEff, Desideratum::WeakEPIC, Desideratum::StrictEPIC, Desideratum::StrictIIC,
                        Desideratum::ExPostIR, Desideratum::StrongExPostIR, Desideratum::WeightMonotonicity}) {
    if (name == to_string(d)) return d;
  }
  return std::nullopt;
}

enum class Verdict { Pass, Violation, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Violation: return "VIOLATION";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "unknown";
}

/// Enough to replay a violating comparison.
struct Witness {
  std::size_t recommender = 0;
  std::vector<double> belief_row;
  std::vector<double> report_row;
  std::optional<BeliefProfile> co_beliefs;  // set when co-reports were fixed
  std::uint64_t seed = 0;
  std::size_t misreport_index = 0;
  double gain = 0.0;  // misreport minus truth
};

struct AuditStats {
  double truth_utility = 0.0;
  double max_gain = -std::numeric_limits<double>::infinity();  // best misreport minus truth
  double std_error = 0.0;                                       // of the max-gain comparison
  std::size_t samples = 0;
  std::size_t checked = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t violations = 0;
  std::size_t equal_shifts_excluded = 0;
};

struct AuditVerdict {
  Desideratum desideratum = Desideratum::StrictIIC;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<Witness> witness;
  AuditStats stats;
  std::string note;
};

// ---------------------------------------------------------------------------
// Misreports.

namespace strategies {
struct SingleCoordinateGrid {
  std::size_t points = 101;
};
struct FullRowRandom {
  std::size_t count = 200;
  std::uint64_t seed = 7;
};
struct EqualShift {
  double delta = 0.1;
};
struct Targeted {
  std::vector<double> row;
};
}  // namespace strategies

using MisreportStrategy = std::variant<strategies::SingleCoordinateGrid, strategies::FullRowRandom,
                                       strategies::EqualShift, strategies::Targeted>;

struct Misreport {
  std::vector<double> row;
  bool equal_shift = false;
  bool clamped = false;  // an equal shift that hit [0,1] and lost its shape
};

inline constexpr double kEqualShiftTolerance = 1e-9;

/// True when report - truth is the same nonzero offset on every coordinate.
inline bool is_equal_shift(std::span<const double> truth, std::span<const double> report,
                           double tol = kEqualShiftTolerance) {
  if (truth.size() != report.size() || truth.empty()) return false;
  const double d = report[0] - truth[0];
  if (std::abs(d) <= tol) return false;
  for (std::size_t q = 1; q < truth.size(); ++q) {
    if (std::abs((report[q] - truth[q]) - d) > tol) return false;
  }
  return true;
}

inline std::vector<Misreport> generate_misreports(const MisreportStrategy& strategy, std::span<const double> truth) {
  std::vector<Misreport> out;
  const std::size_t m = truth.size();
  auto push = [&](std::vector<double> row, bool clamped) {
    if (std::equal(row.begin(), row.end(), truth.begin())) return;
    Misreport r;
    r.equal_shift = is_equal_shift(truth, row);
    r.clamped = clamped;
    r.row = std::move(row);
    out.push_back(std::move(r));
  };
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, strategies::SingleCoordinateGrid>) {
          if (s.points < 2) throw Error(ErrorCode::InvalidArgument, "misreport grid needs at least 2 points");
          for (std::size_t q = 0; q < m; ++q) {
            for (std::size_t k = 0; k < s.points; ++k) {
              std::vector<double> row(truth.begin(), truth.end());
              row[q] = k + 1 == s.points ? 1.0 : static_cast<double>(k) / static_cast<double>(s.points - 1);
              push(std::move(row), false);
            }
          }
        } else if constexpr (std::is_same_v<S, strategies::FullRowRandom>) {
          Rng rng(derive_seed(s.seed, 0));
          for (std::size_t k = 0; k < s.count; ++k) {
            std::vector<double> row(m);
            for (double& x : row) x = uniform01(rng);
            push(std::move(row), false);
          }
        } else if constexpr (std::is_same_v<S, strategies::EqualShift>) {
          std::vector<double> row(m);
          bool clamped = false;
          for (std::size_t q = 0; q < m; ++q) {
            const double shifted = truth[q] + s.delta;
            row[q] = std::clamp(shifted, 0.0, 1.0);
            clamped = clamped || row[q] != shifted;
          }
          push(std::move(row), clamped);
        } else {
          if (s.row.size() != m) throw Error(ErrorCode::ShapeMismatch, "targeted misreport has the wrong length");
          for (double p : s.row) check_probability(p, "targeted misreport");
          push(s.row, false);
        }
      },
      strategy);
  return out;
}

// ---------------------------------------------------------------------------
// Best-response search.

struct SearchOptions {
  // StrictIIC for random priors; WeakEPIC or StrictEPIC with a point prior.
  Desideratum desideratum = Desideratum::StrictIIC;
  bool exclude_equal_shifts = false;
  double exact_tolerance = 1e-9;  // EPIC gain threshold
  double noise_floor = 1e-12;     // separation below this is a tie
};

enum class Comparison { Loss, Tie, Gain };

/// Classification of one paired comparison under the 2-SE rule.
inline Comparison classify(const PairedComparison& pc, double noise_floor) {
  const double bar = std::max(2.0 * pc.std_error, noise_floor);
  if (pc.mean_gain_of_truth > bar) return Comparison::Loss;
  if (-pc.mean_gain_of_truth > bar) return Comparison::Gain;
  return Comparison::Tie;
}

template <class Model>
AuditVerdict best_response_search(const Model& model, std::size_t i, std::span<const double> belief_row,
                                  const PriorSpec& prior, const std::vector<MisreportStrategy>& strategies,
                                  const MonteCarloOptions& mc, const SearchOptions& opts = {}) {
  const bool ex_post = opts.desideratum == Desideratum::WeakEPIC || opts.desideratum == Desideratum::StrictEPIC;
  if (ex_post && !is_degenerate(prior)) {
    throw Error(ErrorCode::InvalidArgument, "ex post checks need fixed co-reports (a degenerate prior)");
  }
  if (!ex_post && opts.desideratum != Desideratum::StrictIIC) {
    throw Error(ErrorCode::InvalidArgument, std::string("best-response search cannot audit ") +
                                                to_string(opts.desideratum));
  }

  std::vector<Misreport> candidates;
  for (const auto& s : strategies) {
    auto more = generate_misreports(s, belief_row);
    candidates.insert(candidates.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(candidates.size());
  for (const auto& c : candidates) rows.push_back(c.row);

  const ComparisonResult cmp = compare_reports(model, i, belief_row, belief_row, rows, prior, mc);

  AuditVerdict v;
  v.desideratum = opts.desideratum;
  v.stats.truth_utility = cmp.truth.mean;
  v.stats.samples = cmp.truth.samples;
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < candidates.size(); ++r) {
    const PairedComparison& pc = cmp.misreports[r];
    if (opts.exclude_equal_shifts && candidates[r].equal_shift) {
      ++v.stats.equal_shifts_excluded;
      continue;
    }
    ++v.stats.checked;
    const double gain = -pc.mean_gain_of_truth;
    if (!best || gain > v.stats.max_gain) {
      best = r;
      v.stats.max_gain = gain;
      v.stats.std_error = pc.std_error;
    }
    Comparison cls;
    if (ex_post) {
      cls = gain > opts.exact_tolerance ? Comparison::Gain
                                        : (-gain > opts.exact_tolerance ? Comparison::Loss : Comparison::Tie);
    } else {
      cls = classify(pc, opts.noise_floor);
    }
    switch (cls) {
      case Comparison::Loss: ++v.stats.losses; break;
      case Comparison::Tie: ++v.stats.ties; break;
      case Comparison::Gain: ++v.stats.violations; break;
    }
  }

  switch (opts.desideratum) {
    case Desideratum::WeakEPIC:
      v.verdict = v.stats.violations > 0 ? Verdict::Violation : Verdict::Pass;
      break;
    case Desideratum::StrictEPIC:
      v.verdict = v.stats.violations + v.stats.ties > 0 ? Verdict::Violation : Verdict::Pass;
      break;
    default:
      if (v.stats.violations > 0) {
        v.verdict = Verdict::Violation;
      } else if (v.stats.ties > 0) {
        v.verdict = Verdict::Inconclusive;
      } else {
        v.verdict = Verdict::Pass;
      }
  }
  if (v.verdict == Verdict::Violation && best) {
    Witness w;
    w.recommender = i;
    w.belief_row.assign(belief_row.begin(), belief_row.end());
    w.report_row = candidates[*best].row;
    if (const auto* point = std::get_if<priors::DegenerateAt>(&prior)) w.co_beliefs = point->profile;
    w.seed = mc.seed;
    w.misreport_index = *best;
    w.gain = v.stats.max_gain;
    v.witness = std::move(w);
  }
  return v;
}

// ---------------------------------------------------------------------------
// No-veto probabilities.

struct NoVetoEstimate {
  BasicMatrix<struct NoVetoTag> probability;  // recommenders by borrowers
  std::size_t samples = 0;
  std::vector<std::pair<std::size_t, std::size_t>> zero_pairs;
};

/// Monte Carlo estimate of P[B_q(0, p_{-i,q}) > c] for every pair (i, q).
inline NoVetoEstimate grain_of_no_veto(const WinklerInstance& inst, const PriorSpec& prior, std::size_t samples,
                                       std::uint64_t seed) {
  validate(inst);
  validate_prior(prior, inst.recommenders, inst.borrowers);
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "no-veto estimate needs at least one sample");
  const std::size_t n = inst.recommenders;
  const std::size_t m = inst.borrowers;
  if (is_degenerate(prior)) samples = 1;
  std::vector<std::size_t> hits(n * m, 0);
  Rng rng(derive_seed(seed, 0));
  BeliefProfile p(n, m);
  const double c = inst.threshold.value();
  for (std::size_t s = 0; s < samples; ++s) {
    sample_profile_into(prior, rng, p, n);
    for (std::size_t q = 0; q < m; ++q) {
      std::vector<double> col = p.column(q);
      for (std::size_t i = 0; i < n; ++i) {
        const double own = col[i];
        col[i] = 0.0;
        if (aggregate(inst.aggregator, col) > c) ++hits[i * m + q];
        col[i] = own;
      }
    }
  }
  NoVetoEstimate out;
  out.samples = samples;
  out.probability = BasicMatrix<NoVetoTag>(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < m; ++q) {
      out.probability(i, q) = static_cast<double>(hits[i * m + q]) / static_cast<double>(samples);
      if (hits[i * m + q] == 0) out.zero_pairs.emplace_back(i, q);
    }
  }
  return out;
}

/// Support bound for linear pooling: the no-veto event is possible for i
/// only if the other recommenders' total weight exceeds c.
inline bool no_veto_possible(const WeightVector& w, std::size_t i, double c) { return w.sum() - w[i] > c; }

// ---------------------------------------------------------------------------
// Capped-liquidity counterexample for the truncated Winkler mechanism.

struct CounterexampleSpec {
  BeliefProfile beliefs;
  double threshold = 0.5;
  std::size_t liquidity = 1;
  std::size_t deviator = 1;
  std::size_t borrower = 0;
  double misreport = 0.0;
  // Reference values at two decimals.
  std::vector<double> honest_reference;
  std::vector<double> misreport_reference;
  std::vector<std::vector<double>> threshold_reference;  // borrowers by recommenders
  double tolerance = 0.005;
};

/// Three recommenders, two borrowers, one loan: recommender 2 gains by
/// vetoing borrower 1 so that borrower 2 is funded instead.
inline CounterexampleSpec capped_winkler_counterexample() {
  CounterexampleSpec s;
  s.beliefs = BeliefProfile::from_rows({{0.7, 0.4}, {0.4, 0.85}, {0.6, 0.4}});
  s.honest_reference = {0.12, 0.07, 0.09};
  s.misreport_reference = {0.04, 0.17, 0.04};
  s.threshold_reference = {{0.5, 0.2, 0.4}, {0.25, 0.7, 0.25}};
  return s;
}

struct CounterexampleReport {
  BeliefProfile beliefs;
  BeliefProfile misreports;
  std::vector<double> honest_aggregates;
  std::vector<double> misreport_aggregates;
  MarginalThresholdMatrix thresholds;
  Allocation honest_allocation;
  Allocation misreport_allocation;
  std::vector<double> honest_utility;
  std::vector<double> misreport_utility;
  double max_abs_error = 0.0;
};

/// Recomputes every cell and throws ReproductionMismatch naming the first
/// cell off by more than the tolerance.
inline CounterexampleReport reproduce_counterexample(const CounterexampleSpec& spec) {
  const std::size_t n = spec.beliefs.rows();
  const std::size_t m = spec.beliefs.cols();
  WinklerInstance inst{n, m, ScoreThreshold(spec.threshold), WeightedLinear{WeightVector::equal(n)},
                       spec.liquidity};
  CounterexampleReport r;
  r.beliefs = spec.beliefs;
  r.misreports = spec.beliefs;
  r.misreports(spec.deviator, spec.borrower) = spec.misreport;
  r.honest_aggregates = winkler_aggregates(inst, r.beliefs);
  r.misreport_aggregates = winkler_aggregates(inst, r.misreports);
  r.thresholds = marginal_thresholds(inst, r.beliefs);
  r.honest_allocation = allocate_winkler(inst, r.beliefs);
  r.misreport_allocation = allocate_winkler(inst, r.misreports);
  for (std::size_t i = 0; i < n; ++i) {
    r.honest_utility.push_back(winkler_expected_utility(inst, r.beliefs, i, r.beliefs.row(i)));
    r.misreport_utility.push_back(winkler_expected_utility(inst, r.misreports, i, r.beliefs.row(i)));
  }
  auto check = [&](double got, double want, const std::string& cell) {
    const double err = std::abs(got - want);
    r.max_abs_error = std::max(r.max_abs_error, err);
    if (!(err <= spec.tolerance)) {
      throw Error(ErrorCode::ReproductionMismatch,
                  cell + ": computed " + std::to_string(got) + ", reference " + std::to_string(want));
    }
  };
  for (std::size_t i = 0; i < spec.honest_reference.size() && i < n; ++i) {
    check(r.honest_utility[i], spec.honest_reference[i], "honest utility of recommender " + std::to_string(i + 1));
  }
  for (std::size_t i = 0; i < spec.misreport_reference.size() && i < n; ++i) {
    check(r.misreport_utility[i], spec.misreport_reference[i],
          "misreport utility of recommender " + std::to_string(i + 1));
  }
  for (std::size_t q = 0; q < spec.threshold_reference.size() && q < m; ++q) {
    for (std::size_t i = 0; i < spec.threshold_reference[q].size() && i < n; ++i) {
      check(r.thresholds(i, q), spec.threshold_reference[q][i],
            "threshold of recommender " + std::to_string(i + 1) + " on borrower " + std::to_string(q + 1));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Exact VCG audits.

/// Best welfare over every set of at most K real borrowers, padded with
/// any number of reserve slots, by direct enumeration.
inline double brute_force_welfare(const VcgInstance& inst, const BeliefProfile& reports) {
  validate(inst);
  const std::vector<double> b = vcg_scores(inst, reports);
  const std::size_t m = inst.borrowers;
  if (m > 24) throw Error(ErrorCode::InvalidArgument, "brute-force welfare is limited to 24 borrowers");
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    const std::size_t size = static_cast<std::size_t>(std::popcount(mask));
    if (size > inst.liquidity) continue;
    if (!inst.has_reserve() && size != inst.liquidity) continue;
    double total = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
      if ((mask >> q) & 1U) total += b[q];
    }
    const std::size_t free_slots = inst.has_reserve() ? inst.liquidity - size : 0;
    for (std::size_t r = 0; r <= free_slots; ++r) best = std::max(best, total + static_cast<double>(r) * inst.reserve);
  }
  return best;
}

inline AuditVerdict audit_allocative_efficiency(const VcgInstance& inst, const BeliefProfile& reports,
                                                double tolerance = 1e-12) {
  AuditVerdict v;
  v.desideratum = Desideratum::AllocEff;
  const Allocation x = allocate_vcg(inst, reports);
  const double got = welfare_of(vcg_scores(inst, reports), x, inst.reserve);
  const double best = brute_force_welfare(inst, reports);
  v.stats.truth_utility = got;
  v.stats.max_gain = best - got;
  v.stats.checked = 1;
  v.verdict = best - got > tolerance ? Verdict::Violation : Verdict::Pass;
  if (v.verdict == Verdict::Violation) v.note = "allocation welfare " + std::to_string(got) + " < " + std::to_string(best);
  return v;
}

/// Truthful expected utility is nonnegative for every recommender.
inline AuditVerdict audit_ex_post_ir(const VcgInstance& inst, const BeliefProfile& beliefs, double tolerance = 0.0) {
  AuditVerdict v;
  v.desideratum = Desideratum::ExPostIR;
  v.verdict = Verdict::Pass;
  v.stats.max_gain = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.recommenders; ++i) {
    const double u = vcg_expected_utility(inst, beliefs, i, beliefs.row(i));
    ++v.stats.checked;
    v.stats.max_gain = std::min(v.stats.max_gain, u);  // minimum utility seen
    if (u < -tolerance) {
      ++v.stats.violations;
      v.verdict = Verdict::Violation;
    }
  }
  return v;
}

inline AuditVerdict audit_ex_post_ir(const WinklerInstance& inst, const BeliefProfile& beliefs,
                                     double tolerance = 0.0) {
  AuditVerdict v;
  v.desideratum = Desideratum::ExPostIR;
  v.verdict = Verdict::Pass;
  v.stats.max_gain = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.recommenders; ++i) {
    const double u = winkler_expected_utility(inst, beliefs, i, beliefs.row(i));
    ++v.stats.checked;
    v.stats.max_gain = std::min(v.stats.max_gain, u);
    if (u < -tolerance) {
      ++v.stats.violations;
      v.verdict = Verdict::Violation;
    }
  }
  return v;
}

/// Realized utility >= 0 for every recommender under every outcome vector
/// of the funded borrowers.
inline AuditVerdict audit_strong_ex_post_ir(const VcgInstance& inst, const BeliefProfile& reports) {
  AuditVerdict v;
  v.desideratum = Desideratum::StrongExPostIR;
  v.verdict = Verdict::Pass;
  v.stats.max_gain = std::numeric_limits<double>::infinity();
  const Allocation x = allocate_vcg(inst, reports);
  std::vector<std::size_t> funded;
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (x.funded[q]) funded.push_back(q);
  }
  if (funded.size() > 20) throw Error(ErrorCode::InvalidArgument, "too many funded borrowers to enumerate outcomes");
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << funded.size()); ++mask) {
    OutcomeVector o(inst.borrowers);
    for (std::size_t k = 0; k < funded.size(); ++k) {
      o[funded[k]] = ((mask >> k) & 1U) ? Outcome::Repaid : Outcome::Default;
    }
    const SettlementResult s = settle_vcg(inst, reports, o);
    for (std::size_t i = 0; i < inst.recommenders; ++i) {
      const double u = s.realized_utility(i);
      ++v.stats.checked;
      v.stats.max_gain = std::min(v.stats.max_gain, u);
      if (u < 0.0) {
        ++v.stats.violations;
        v.verdict = Verdict::Violation;
      }
    }
  }
  return v;
}

/// Truthful utility of recommender i at weight w_low and at w_high, the
/// other weights unchanged and nothing renormalized.
struct WeightMonotonicityResult {
  double utility_low = 0.0;
  double utility_high = 0.0;
  double value_on_allocation = 0.0;  // sum of p_iq over the w_low allocation
  bool applicable = false;           // value_on_allocation > 0
  bool strictly_increases = false;
};

inline WeightMonotonicityResult weight_monotonicity(const VcgInstance& inst, const BeliefProfile& beliefs,
                                                    std::size_t i, double w_low, double w_high) {
  if (!(w_high > w_low && w_low > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "weight monotonicity needs w_high > w_low > 0");
  }
  VcgInstance low = inst;
  low.weights = inst.weights.with_weight(i, w_low);
  VcgInstance high = inst;
  high.weights = inst.weights.with_weight(i, w_high);
  WeightMonotonicityResult r;
  r.utility_low = vcg_expected_utility(low, beliefs, i, beliefs.row(i));
  r.utility_high = vcg_expected_utility(high, beliefs, i, beliefs.row(i));
  const Allocation x = allocate_vcg(low, beliefs);
  for (std::size_t q = 0; q < inst.borrowers; ++q) {
    if (x.funded[q]) r.value_on_allocation += beliefs(i, q);
  }
  r.applicable = r.value_on_allocation > 0.0;
  r.strictly_increases = r.utility_high > r.utility_low;
  return r;
}

/// A random VCG instance with truthful beliefs, for property audits.
struct VcgCase {
  VcgInstance instance;
  BeliefProfile beliefs;
};

inline VcgCase random_vcg_case(Rng& rng, std::size_t max_n, std::size_t max_m, bool tcomp_enabled,
                               double alpha = 1.0) {
  VcgCase c;
  const std::size_t n = 1 + static_cast<std::size_t>(rng() % max_n);
  const std::size_t m = 1 + static_cast<std::size_t>(rng() % max_m);
  const std::size_t k = 1 + static_cast<std::size_t>(rng() % m);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = 0.05 + uniform01(rng);
    total += x;
  }
  for (double& x : w) x /= total;
  c.instance.recommenders = n;
  c.instance.borrowers = m;
  c.instance.liquidity = k;
  c.instance.reserve = uniform01(rng) < 0.25 ? 0.0 : 0.05 + 0.9 * uniform01(rng);
  c.instance.weights = WeightVector::normalized(std::move(w));
  c.instance.alpha = alpha;
  c.instance.tcomp_enabled = tcomp_enabled;
  c.beliefs = BeliefProfile(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < m; ++q) c.beliefs(i, q) = uniform01(rng);
  }
  return c;
}

/// Raises recommender i's weight by `factor` on `trials` random instances
/// and passes iff truthful utility strictly rises on every instance where i
/// has positive value on the allocation.
inline AuditVerdict weight_monotonicity_check(std::size_t trials, std::uint64_t seed, std::size_t max_n = 5,
                                              std::size_t max_m = 6, double factor = 1.5) {
  AuditVerdict v;
  v.desideratum = Desideratum::WeightMonotonicity;
  v.verdict = Verdict::Pass;
  Rng rng(derive_seed(seed, 0));
  std::size_t skipped = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    VcgCase c = random_vcg_case(rng, max_n, max_m, false);
    const std::size_t i = static_cast<std::size_t>(rng() % c.instance.recommenders);
    const double w = c.instance.weights[i];
    const WeightMonotonicityResult r = weight_monotonicity(c.instance, c.beliefs, i, w, w * factor);
    if (!r.applicable) {
      ++skipped;
      continue;
    }
    ++v.stats.checked;
    if (r.strictly_increases) {
      ++v.stats.losses;
    } else {
      ++v.stats.violations;
      v.verdict = Verdict::Violation;
    }
  }
  v.note = std::to_string(v.stats.checked - v.stats.violations) + "/" + std::to_string(v.stats.checked) +
           " strict increases, " + std::to_string(skipped) + " skipped with zero value";
  return v;
}

}  // namespace loanelicit
