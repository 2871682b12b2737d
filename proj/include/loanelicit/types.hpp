#pragma once

// Core value types shared by every mechanism: belief matrices, allocations,
// outcomes, settlements and the library error type.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace loanelicit {

enum class ErrorCode {
  InvalidArgument,
  NonFiniteScore,
  TruncatedRegion,
  ArityMismatch,
  ShapeMismatch,
  EmptyHistory,
  AllNonPositiveContribution,
  ZeroWeightRecommender,
  MissingOutcome,
  OutcomeForUnfundedBorrower,
  ReserveRecommenderHasNoPayment,
  ReproductionMismatch,
  Validation,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::TruncatedRegion: return "TruncatedRegion";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::AllNonPositiveContribution: return "AllNonPositiveContribution";
    case ErrorCode::ZeroWeightRecommender: return "ZeroWeightRecommender";
    case ErrorCode::MissingOutcome: return "MissingOutcome";
    case ErrorCode::OutcomeForUnfundedBorrower: return "OutcomeForUnfundedBorrower";
    case ErrorCode::ReserveRecommenderHasNoPayment: return "ReserveRecommenderHasNoPayment";
    case ErrorCode::ReproductionMismatch: return "ReproductionMismatch";
    case ErrorCode::Validation: return "Validation";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Repayment outcome of a funded borrower.
enum class Outcome : std::uint8_t { Default = 0, Repaid = 1 };

inline double indicator(Outcome o) noexcept { return o == Outcome::Repaid ? 1.0 : 0.0; }

inline Outcome outcome_from_int(int value) {
  if (value != 0 && value != 1) {
    throw Error(ErrorCode::InvalidArgument, "outcome must be 0 or 1, got " + std::to_string(value));
  }
  return value == 1 ? Outcome::Repaid : Outcome::Default;
}

/// Dense row-major matrix with a phantom tag so belief profiles and
/// threshold matrices cannot be mixed up.
template <class Tag>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static BasicMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    BasicMatrix out(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) {
        throw Error(ErrorCode::ShapeMismatch, "ragged matrix: row " + std::to_string(i) + " has " +
                                                  std::to_string(rows[i].size()) + " entries, expected " +
                                                  std::to_string(cols));
      }
      std::copy(rows[i].begin(), rows[i].end(), out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols));
    }
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double operator()(std::size_t i, std::size_t q) const { return data_[i * cols_ + q]; }
  double& operator()(std::size_t i, std::size_t q) { return data_[i * cols_ + q]; }

  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> column(std::size_t q) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, q);
    return out;
  }

  void set_row(std::size_t i, std::span<const double> values) {
    if (values.size() != cols_) {
      throw Error(ErrorCode::ShapeMismatch, "row length " + std::to_string(values.size()) +
                                                " does not match " + std::to_string(cols_) + " columns");
    }
    std::copy(values.begin(), values.end(), row(i).begin());
  }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  const std::vector<double>& values() const noexcept { return data_; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n x m matrix of repayment probabilities, recommenders by borrowers.
/// Used both for true beliefs and for reports.
using BeliefProfile = BasicMatrix<struct BeliefTag>;

inline bool is_probability(double p) noexcept { return p >= 0.0 && p <= 1.0; }

inline void check_probability(double p, const std::string& what) {
  if (!is_probability(p)) {
    throw Error(ErrorCode::InvalidArgument, what + " must lie in [0,1], got " + std::to_string(p));
  }
}

inline void validate_probabilities(const BeliefProfile& profile) {
  for (std::size_t i = 0; i < profile.rows(); ++i) {
    for (std::size_t q = 0; q < profile.cols(); ++q) {
      check_probability(profile(i, q),
                        "belief (" + std::to_string(i) + "," + std::to_string(q) + ")");
    }
  }
}

/// Lending decision over the real borrowers. Reserve borrowers used by the
/// VCG mechanism are bookkeeping only and counted, never indexed.
struct Allocation {
  std::vector<bool> funded;
  std::size_t reserves_funded = 0;

  std::size_t funded_count() const {
    return static_cast<std::size_t>(std::count(funded.begin(), funded.end(), true));
  }
  bool is_funded(std::size_t q) const { return funded.at(q); }

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// One slot per real borrower; only funded borrowers carry an outcome.
using OutcomeVector = std::vector<std::optional<Outcome>>;

inline void check_outcomes(const Allocation& allocation, const OutcomeVector& outcomes) {
  if (outcomes.size() != allocation.funded.size()) {
    throw Error(ErrorCode::ShapeMismatch, "outcome vector has " + std::to_string(outcomes.size()) +
                                              " slots for " + std::to_string(allocation.funded.size()) +
                                              " borrowers");
  }
  for (std::size_t q = 0; q < outcomes.size(); ++q) {
    if (allocation.funded[q] && !outcomes[q]) {
      throw Error(ErrorCode::MissingOutcome, "funded borrower " + std::to_string(q) + " has no outcome");
    }
    if (!allocation.funded[q] && outcomes[q]) {
      throw Error(ErrorCode::OutcomeForUnfundedBorrower,
                  "borrower " + std::to_string(q) + " was not funded but has an outcome");
    }
  }
}

/// Payments of one round. `immediate[i]` is paid BY recommender i,
/// `contingent[i][q]` and `tcomp[i]` are paid TO recommender i.
struct SettlementResult {
  Allocation allocation;
  std::vector<double> immediate;
  std::vector<std::vector<double>> contingent;
  std::vector<double> tcomp;

  std::size_t recommenders() const noexcept { return immediate.size(); }

  double contingent_total(std::size_t i) const {
    return std::accumulate(contingent.at(i).begin(), contingent.at(i).end(), 0.0);
  }

  // Rebate minus pivot is formed first: it is exactly nonnegative whenever
  // the rebate covers the pivot, so adding nonnegative contingent payments
  // cannot round below zero.
  double realized_utility(std::size_t i) const {
    return contingent_total(i) + (tcomp.at(i) - immediate.at(i));
  }
};

/// Net payment from the mechanism to the recommenders.
inline double deficit(const SettlementResult& result) {
  double total = 0.0;
  for (std::size_t i = 0; i < result.recommenders(); ++i) total += result.realized_utility(i);
  return total;
}

}  // namespace loanelicit
