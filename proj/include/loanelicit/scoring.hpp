#pragma once

// Binary scoring rules: quadratic, logarithmic, the Winkler asymmetrization
// of either, their truncated variants and the constant rule, together with
// expected-score and single-pair mechanism utility evaluators.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "loanelicit/types.hpp"

namespace loanelicit {

/// Lender profit threshold restricted to the open interval (0,1).
class ScoreThreshold {
 public:
  explicit ScoreThreshold(double c) : c_(c) {
    if (!(c > 0.0 && c < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "score threshold must lie in (0,1), got " + std::to_string(c));
    }
  }
  double value() const noexcept { return c_; }

  friend bool operator==(const ScoreThreshold&, const ScoreThreshold&) = default;

 private:
  double c_;
};

/// Symmetric strictly proper rules that can be asymmetrized.
enum class BaseRule { Quadratic, Logarithmic };

namespace rules {
struct Quadratic {};
struct Logarithmic {};
struct WinklerOf {
  BaseRule base;
  ScoreThreshold threshold;
};
struct TruncatedQuadratic {
  ScoreThreshold threshold;
};
struct TruncatedWinklerLog {
  ScoreThreshold threshold;
};
struct ConstantWeight {
  double weight;
};
}  // namespace rules

using ScoringRule = std::variant<rules::Quadratic, rules::Logarithmic, rules::WinklerOf,
                                 rules::TruncatedQuadratic, rules::TruncatedWinklerLog,
                                 rules::ConstantWeight>;

inline rules::ConstantWeight constant_weight(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw Error(ErrorCode::InvalidArgument, "constant rule weight must be finite and >= 0");
  }
  return rules::ConstantWeight{weight};
}

namespace detail {

// May return -inf for the logarithmic rule at a boundary report.
inline double base_score(BaseRule rule, double report, Outcome o) {
  switch (rule) {
    case BaseRule::Quadratic: {
      const double hit = o == Outcome::Repaid ? report : 1.0 - report;
      return 2.0 * hit - report * report - (1.0 - report) * (1.0 - report);
    }
    case BaseRule::Logarithmic:
      return std::log(o == Outcome::Repaid ? report : 1.0 - report);
  }
  return 0.0;
}

// T(c, report): both branches are provided even though truncated
// mechanisms only ever reach the upper one.
inline double winkler_denominator(BaseRule rule, double c, double report) {
  if (report <= c) return base_score(rule, 0.0, Outcome::Default) - base_score(rule, c, Outcome::Default);
  return base_score(rule, 1.0, Outcome::Repaid) - base_score(rule, c, Outcome::Repaid);
}

inline double winkler_score(BaseRule rule, double c, double report, Outcome o) {
  return (base_score(rule, report, o) - base_score(rule, c, o)) / winkler_denominator(rule, c, report);
}

inline double require_finite(double value, double report, Outcome o) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFiniteScore, "score is not finite at report " + std::to_string(report) +
                                               " with outcome " + std::to_string(static_cast<int>(o)));
  }
  return value;
}

inline void require_scored_region(double report, double c) {
  if (!(report > c)) {
    throw Error(ErrorCode::TruncatedRegion, "truncated rule queried at report " + std::to_string(report) +
                                                " <= threshold " + std::to_string(c));
  }
}

// Expected log-Winkler score at marginal threshold t in (0,1) with the
// logarithms of t, 1-t, report and 1-report precomputed. Zero-mass
// branches are skipped so 0 * (-inf) evaluates to 0; a -inf branch with
// positive mass yields -inf.
inline double winkler_log_expected(double t, double ln_t, double ln_1mt, double belief, double report,
                                   double ln_r, double ln_1mr) {
  const double denom = report <= t ? 0.0 - ln_1mt : 0.0 - ln_t;
  double total = 0.0;
  if (belief > 0.0) total += belief * ((ln_r - ln_t) / denom);
  if (belief < 1.0) total += (1.0 - belief) * ((ln_1mr - ln_1mt) / denom);
  return total;
}

}  // namespace detail

/// Score of `report` under `rule` when `outcome` occurs.
inline double score(const ScoringRule& rule, double report, Outcome outcome) {
  check_probability(report, "report");
  return std::visit(
      [&](const auto& r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, rules::Quadratic>) {
          return detail::base_score(BaseRule::Quadratic, report, outcome);
        } else if constexpr (std::is_same_v<R, rules::Logarithmic>) {
          return detail::require_finite(detail::base_score(BaseRule::Logarithmic, report, outcome), report,
                                        outcome);
        } else if constexpr (std::is_same_v<R, rules::WinklerOf>) {
          return detail::require_finite(detail::winkler_score(r.base, r.threshold.value(), report, outcome),
                                        report, outcome);
        } else if constexpr (std::is_same_v<R, rules::TruncatedQuadratic>) {
          detail::require_scored_region(report, r.threshold.value());
          return detail::base_score(BaseRule::Quadratic, report, outcome);
        } else if constexpr (std::is_same_v<R, rules::TruncatedWinklerLog>) {
          detail::require_scored_region(report, r.threshold.value());
          return detail::require_finite(
              detail::winkler_score(BaseRule::Logarithmic, r.threshold.value(), report, outcome), report,
              outcome);
        } else {
          return outcome == Outcome::Repaid ? r.weight : 0.0;
        }
      },
      rule);
}

/// E_{o ~ belief}[score(rule, report, o)]. Branches with zero mass are not
/// evaluated.
inline double expected_score(const ScoringRule& rule, double belief, double report) {
  check_probability(belief, "belief");
  double total = 0.0;
  if (belief > 0.0) total += belief * score(rule, report, Outcome::Repaid);
  if (belief < 1.0) total += (1.0 - belief) * score(rule, report, Outcome::Default);
  return total;
}

/// Single recommender, single borrower mechanisms built on a truncated rule.
enum class MechanismVariant {
  TruncWinklerLog,             // zero transfer, log-Winkler score when funded
  TruncQuadraticWithTransfer,  // quadratic score when funded, c^2+(1-c)^2 paid otherwise
  TruncQuadratic,              // quadratic score when funded, nothing otherwise
};

inline const char* to_string(MechanismVariant v) {
  switch (v) {
    case MechanismVariant::TruncWinklerLog: return "trunc-winkler-log";
    case MechanismVariant::TruncQuadraticWithTransfer: return "trunc-quadratic";
    case MechanismVariant::TruncQuadratic: return "trunc-quadratic-plain";
  }
  return "unknown";
}

/// Accepts the names produced by to_string plus "trunc-quadratic-transfer".
inline std::optional<MechanismVariant> parse_variant(const std::string& name) {
  if (name == "trunc-winkler-log") return MechanismVariant::TruncWinklerLog;
  if (name == "trunc-quadratic" || name == "trunc-quadratic-transfer") {
    return MechanismVariant::TruncQuadraticWithTransfer;
  }
  if (name == "trunc-quadratic-plain") return MechanismVariant::TruncQuadratic;
  return std::nullopt;
}

/// Expected utility of reporting `report` with true belief `belief`.
inline double mechanism_utility(ScoreThreshold threshold, double belief, double report, MechanismVariant variant) {
  check_probability(belief, "belief");
  check_probability(report, "report");
  const double c = threshold.value();
  if (report <= c) {
    if (variant == MechanismVariant::TruncQuadraticWithTransfer) return c * c + (1.0 - c) * (1.0 - c);
    return 0.0;
  }
  if (variant == MechanismVariant::TruncWinklerLog) {
    return expected_score(rules::TruncatedWinklerLog{threshold}, belief, report);
  }
  return expected_score(rules::TruncatedQuadratic{threshold}, belief, report);
}

inline double truthful_mechanism_utility(ScoreThreshold threshold, double belief, MechanismVariant variant) {
  return mechanism_utility(threshold, belief, belief, variant);
}

/// Limit of the expected utility as the report approaches the threshold
/// from above (the "c + epsilon" deviation).
inline double threshold_deviation_utility(ScoreThreshold threshold, double belief, MechanismVariant variant) {
  check_probability(belief, "belief");
  const double c = threshold.value();
  if (variant == MechanismVariant::TruncWinklerLog) return 0.0;
  return belief * detail::base_score(BaseRule::Quadratic, c, Outcome::Repaid) +
         (1.0 - belief) * detail::base_score(BaseRule::Quadratic, c, Outcome::Default);
}

struct CurvePoint {
  double belief;
  double utility;
  double threshold_deviation;
};

/// Truthful utility on `grid_size` evenly spaced beliefs with exact
/// endpoints 0 and 1.
inline std::vector<CurvePoint> utility_curve(ScoreThreshold threshold, MechanismVariant variant,
                                             std::size_t grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "utility curve needs at least 2 grid points");
  std::vector<CurvePoint> curve;
  curve.reserve(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k) {
    const double p = k + 1 == grid_size ? 1.0 : static_cast<double>(k) / static_cast<double>(grid_size - 1);
    curve.push_back({p, truthful_mechanism_utility(threshold, p, variant),
                     threshold_deviation_utility(threshold, p, variant)});
  }
  return curve;
}

/// Checks U(x_k) <= (U(x_{k-d}) + U(x_{k+d}))/2 + tol on every evenly
/// spaced triple of the curve.
inline bool is_midpoint_convex(const std::vector<CurvePoint>& curve, double tol = 1e-12) {
  for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
    for (std::size_t d = 1; d <= k && k + d < curve.size(); ++d) {
      if (curve[k].utility > 0.5 * (curve[k - d].utility + curve[k + d].utility) + tol) return false;
    }
  }
  return true;
}

struct GridDeviation {
  double belief = 0.0;
  double report = 0.0;
  double gain = 0.0;  // misreport utility minus truthful utility
};

/// Largest gain from misreporting over a belief grid and a report grid of
/// the same resolution, evaluated exactly.
inline GridDeviation best_grid_deviation(ScoreThreshold threshold, MechanismVariant variant, std::size_t grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "deviation grid needs at least 2 points");
  auto at = [&](std::size_t k) {
    return k + 1 == grid_size ? 1.0 : static_cast<double>(k) / static_cast<double>(grid_size - 1);
  };
  GridDeviation best{0.0, 0.0, -std::numeric_limits<double>::infinity()};
  for (std::size_t a = 0; a < grid_size; ++a) {
    const double p = at(a);
    const double truthful = truthful_mechanism_utility(threshold, p, variant);
    for (std::size_t b = 0; b < grid_size; ++b) {
      if (b == a) continue;
      const double r = at(b);
      double u;
      try {
        u = mechanism_utility(threshold, p, r, variant);
      } catch (const Error&) {
        continue;  // a log score at a boundary report meets a possible outcome
      }
      if (u - truthful > best.gain) best = {p, r, u - truthful};
    }
  }
  return best;
}

}  // namespace loanelicit
