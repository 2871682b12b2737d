#pragma once

// Belief aggregation: weighted linear pooling, monotone custom aggregators
// and outcome-based (Budescu-style) contribution weights.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "loanelicit/types.hpp"

namespace loanelicit {

inline constexpr double kWeightSumTolerance = 1e-9;

class WeightVector {
 public:
  WeightVector() = default;

  /// Nonnegative weights summing to one.
  static WeightVector normalized(std::vector<double> weights) {
    WeightVector w = unnormalized(std::move(weights));
    if (std::abs(w.sum() - 1.0) > kWeightSumTolerance) {
      throw Error(ErrorCode::InvalidArgument, "weights sum to " + std::to_string(w.sum()) + ", expected 1");
    }
    return w;
  }

  /// Nonnegative weights with no sum constraint (weight-raising checks).
  static WeightVector unnormalized(std::vector<double> weights) {
    if (weights.empty()) throw Error(ErrorCode::InvalidArgument, "weight vector is empty");
    for (double x : weights) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
      }
    }
    WeightVector w;
    w.w_ = std::move(weights);
    return w;
  }

  static WeightVector equal(std::size_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "weight vector is empty");
    return unnormalized(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const noexcept { return w_; }
  double sum() const { return std::accumulate(w_.begin(), w_.end(), 0.0); }
  double max_weight() const { return w_.empty() ? 0.0 : *std::max_element(w_.begin(), w_.end()); }
  bool is_normalized() const { return std::abs(sum() - 1.0) <= kWeightSumTolerance; }

  /// Copy with one weight replaced; the result is not renormalized.
  WeightVector with_weight(std::size_t i, double weight) const {
    std::vector<double> w = w_;
    w.at(i) = weight;
    return unnormalized(std::move(w));
  }

  friend bool operator==(const WeightVector&, const WeightVector&) = default;

 private:
  std::vector<double> w_;
};

struct WeightedLinear {
  WeightVector weights;
};

/// User-supplied aggregator; must be weakly nondecreasing in every
/// coordinate and map into [0,1].
struct MonotoneCustom {
  std::size_t arity = 0;
  std::function<double(std::span<const double>)> fn;
};

using Aggregator = std::variant<WeightedLinear, MonotoneCustom>;

inline std::size_t arity(const Aggregator& agg) {
  if (const auto* lin = std::get_if<WeightedLinear>(&agg)) return lin->weights.size();
  return std::get<MonotoneCustom>(agg).arity;
}

inline double aggregate(const Aggregator& agg, std::span<const double> column) {
  if (column.size() != arity(agg)) {
    throw Error(ErrorCode::ArityMismatch, "aggregator expects " + std::to_string(arity(agg)) +
                                              " reports, got " + std::to_string(column.size()));
  }
  if (const auto* lin = std::get_if<WeightedLinear>(&agg)) {
    double total = 0.0;
    for (std::size_t i = 0; i < column.size(); ++i) total += lin->weights[i] * column[i];
    return total;
  }
  return std::get<MonotoneCustom>(agg).fn(column);
}

/// Spot check of coordinate-wise monotonicity on random columns. Returns
/// false on the first decreasing bump found.
inline bool spot_check_monotone(const Aggregator& agg, std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = arity(agg);
  std::vector<double> col(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (double& x : col) x = u(rng);
    const std::size_t i = static_cast<std::size_t>(rng() % n);
    const double before = aggregate(agg, col);
    col[i] = col[i] + (1.0 - col[i]) * u(rng);
    if (aggregate(agg, col) < before) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Outcome-based weights.

struct BudescuConstants {
  double a = 100.0;
  double b = -50.0;
  // Contributions within this distance of zero count as zero.
  double contribution_tolerance = 1e-12;
};

/// One funded borrower with an observed outcome. A missing report means the
/// recommender did not take part in that round.
struct HistoryEntry {
  std::vector<std::optional<double>> reports;
  Outcome outcome = Outcome::Default;
};

struct RoundHistory {
  std::size_t recommenders = 0;
  std::vector<HistoryEntry> entries;

  void add(std::vector<std::optional<double>> reports, Outcome outcome) {
    if (reports.size() != recommenders) {
      throw Error(ErrorCode::ArityMismatch, "history entry has " + std::to_string(reports.size()) +
                                                " report slots, expected " + std::to_string(recommenders));
    }
    entries.push_back({std::move(reports), outcome});
  }

  bool empty() const noexcept { return entries.empty(); }
};

/// Quality score Q (or Q_{-i} when `exclude` is set): a + b times the mean
/// over past funded borrowers of the squared error of the unweighted
/// consensus on both outcome cells. With the default constants Q is in
/// [0, 100].
inline double budescu_quality(const RoundHistory& history, std::optional<std::size_t> exclude = std::nullopt,
                              const BudescuConstants& k = {}) {
  if (history.empty()) throw Error(ErrorCode::EmptyHistory, "no funded borrowers with observed outcomes");
  if (exclude && *exclude >= history.recommenders) {
    throw Error(ErrorCode::InvalidArgument, "excluded recommender " + std::to_string(*exclude) + " out of range");
  }
  double squared_error = 0.0;
  for (std::size_t e = 0; e < history.entries.size(); ++e) {
    const HistoryEntry& entry = history.entries[e];
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < entry.reports.size(); ++j) {
      if ((exclude && j == *exclude) || !entry.reports[j]) continue;
      sum += *entry.reports[j];
      ++count;
    }
    if (count == 0) {
      throw Error(ErrorCode::EmptyHistory, "history entry " + std::to_string(e) + " has no included reports");
    }
    const double m1 = sum / static_cast<double>(count);
    const double o1 = indicator(entry.outcome);
    squared_error += (o1 - m1) * (o1 - m1) + ((1.0 - o1) - (1.0 - m1)) * ((1.0 - o1) - (1.0 - m1));
  }
  return k.a + k.b * squared_error / static_cast<double>(history.entries.size());
}

/// Accuracy contributions C_i = (Q - Q_{-i}) / |M*|.
inline std::vector<double> budescu_contributions(const RoundHistory& history, const BudescuConstants& k = {}) {
  const double q_all = budescu_quality(history, std::nullopt, k);
  const double count = static_cast<double>(history.entries.size());
  std::vector<double> c(history.recommenders);
  for (std::size_t i = 0; i < history.recommenders; ++i) {
    c[i] = (q_all - budescu_quality(history, i, k)) / count;
    if (std::abs(c[i]) <= k.contribution_tolerance) c[i] = 0.0;
  }
  return c;
}

inline WeightVector budescu_weights(const RoundHistory& history, const BudescuConstants& k = {}) {
  const std::vector<double> c = budescu_contributions(history, k);
  double positive = 0.0;
  for (double x : c) {
    if (x > 0.0) positive += x;
  }
  if (!(positive > 0.0)) {
    throw Error(ErrorCode::AllNonPositiveContribution, "no recommender has a positive accuracy contribution");
  }
  std::vector<double> w(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] > 0.0) w[i] = c[i] / positive;
  }
  return WeightVector::normalized(std::move(w));
}

/// Falls back to equal weights on an empty history or when no
/// contribution is positive.
inline WeightVector budescu_weights_or_equal(const RoundHistory& history, const BudescuConstants& k = {}) {
  try {
    return budescu_weights(history, k);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyHistory || e.code() == ErrorCode::AllNonPositiveContribution) {
      return WeightVector::equal(history.recommenders);
    }
    throw;
  }
}

}  // namespace loanelicit
