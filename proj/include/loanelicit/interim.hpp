#pragma once

// Monte Carlo estimation of interim utilities: recommender i holds a fixed
// belief row, co-recommenders' beliefs are drawn from a prior and reported
// truthfully, and utilities are expectations over i's own beliefs.
//
// A Model supplies
//   Context   make_context() const;
//   Workspace make_workspace() const;
//   void      prepare(std::size_t i, const BeliefProfile& others, Context&) const;
//   Report    make_report(std::span<const double> belief, std::span<const double> report) const;
//   double    utility(const Context&, const Report&, Workspace&) const;
//   std::size_t recommenders() const, borrowers() const;
// All candidate reports are scored on the same draws (common random
// numbers), so comparisons use paired differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <thread>
#include <type_traits>
#include <vector>

#include "loanelicit/prior.hpp"
#include "loanelicit/types.hpp"

namespace loanelicit {

struct MonteCarloOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  std::size_t chunk = 2048;
};

struct InterimEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Truth minus misreport. Positive means the misreport loses.
struct PairedComparison {
  InterimEstimate misreport;
  double mean_gain_of_truth = 0.0;
  double std_error = 0.0;
  // Draws on which the misreport had utility -inf.
  std::size_t unbounded_losses = 0;
};

struct ComparisonResult {
  InterimEstimate truth;
  std::vector<PairedComparison> misreports;
};

namespace detail {

// Streaming mean and centered sum of squares.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Moments& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(count + other.count);
    const double delta = other.mean - mean;
    mean += delta * static_cast<double>(other.count) / total;
    m2 += other.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(other.count) / total;
    count += other.count;
  }

  double std_error() const {
    if (count < 2) return 0.0;
    const double var = std::max(0.0, m2 / static_cast<double>(count - 1));
    return std::sqrt(var / static_cast<double>(count));
  }
};

struct ChunkStats {
  Moments truth;
  std::size_t truth_unbounded = 0;
  std::vector<Moments> misreport;
  std::vector<Moments> diff;
  std::vector<std::size_t> unbounded;
};

}  // namespace detail

template <class Model>
ComparisonResult compare_reports(const Model& model, std::size_t i, std::span<const double> belief_row,
                                 std::span<const double> truth_report,
                                 const std::vector<std::vector<double>>& misreports, const PriorSpec& prior,
                                 const MonteCarloOptions& opts) {
  const std::size_t n = model.recommenders();
  const std::size_t m = model.borrowers();
  if (i >= n) throw Error(ErrorCode::InvalidArgument, "recommender index " + std::to_string(i) + " out of range");
  if (belief_row.size() != m || truth_report.size() != m) {
    throw Error(ErrorCode::ShapeMismatch, "belief row length does not match borrower count");
  }
  for (double p : belief_row) check_probability(p, "belief");
  for (const auto& row : misreports) {
    if (row.size() != m) throw Error(ErrorCode::ShapeMismatch, "misreport row length does not match borrower count");
    for (double p : row) check_probability(p, "misreport");
  }
  if (opts.samples == 0) throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs at least one sample");
  if (opts.chunk == 0) throw Error(ErrorCode::InvalidArgument, "chunk size must be positive");
  validate_prior(prior, n, m);

  const std::size_t samples = is_degenerate(prior) ? 1 : opts.samples;
  const std::size_t chunks = (samples + opts.chunk - 1) / opts.chunk;
  const std::size_t k = misreports.size();

  const auto truth = model.make_report(belief_row, truth_report);
  std::vector<std::remove_const_t<decltype(truth)>> reports;
  reports.reserve(k);
  for (const auto& row : misreports) reports.push_back(model.make_report(belief_row, row));

  std::vector<detail::ChunkStats> stats(chunks);
  auto run_chunks = [&](std::size_t first, std::size_t stride) {
    auto ctx = model.make_context();
    auto ws = model.make_workspace();
    BeliefProfile others(n, m);
    for (std::size_t c = first; c < chunks; c += stride) {
      detail::ChunkStats& s = stats[c];
      s.misreport.assign(k, {});
      s.diff.assign(k, {});
      s.unbounded.assign(k, 0);
      Rng rng(derive_seed(opts.seed, c));
      const std::size_t begin = c * opts.chunk;
      const std::size_t end = std::min(samples, begin + opts.chunk);
      for (std::size_t t = begin; t < end; ++t) {
        sample_profile_into(prior, rng, others, i);
        others.set_row(i, belief_row);
        model.prepare(i, others, ctx);
        constexpr double neg_inf = -std::numeric_limits<double>::infinity();
        const double u_truth = model.utility(ctx, truth, ws);
        if (u_truth == neg_inf) {
          ++s.truth_unbounded;
        } else {
          s.truth.add(u_truth);
        }
        for (std::size_t r = 0; r < k; ++r) {
          const double u = model.utility(ctx, reports[r], ws);
          if (u == neg_inf) {
            ++s.unbounded[r];
            continue;
          }
          s.misreport[r].add(u);
          if (u_truth != neg_inf) s.diff[r].add(u_truth - u);
        }
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, chunks));
  if (workers == 1) {
    run_chunks(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_chunks, w, workers);
    for (auto& th : pool) th.join();
  }

  // Merge strictly in chunk order so the result does not depend on workers.
  detail::Moments truth_total;
  std::size_t truth_unbounded = 0;
  std::vector<detail::Moments> mis_total(k);
  std::vector<detail::Moments> diff_total(k);
  std::vector<std::size_t> unbounded(k, 0);
  for (const auto& s : stats) {
    truth_total.merge(s.truth);
    truth_unbounded += s.truth_unbounded;
    for (std::size_t r = 0; r < k; ++r) {
      mis_total[r].merge(s.misreport[r]);
      diff_total[r].merge(s.diff[r]);
      unbounded[r] += s.unbounded[r];
    }
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  ComparisonResult out;
  out.truth = truth_unbounded > 0 ? InterimEstimate{-inf, 0.0, samples}
                                  : InterimEstimate{truth_total.mean, truth_total.std_error(), samples};
  out.misreports.resize(k);
  for (std::size_t r = 0; r < k; ++r) {
    PairedComparison& pc = out.misreports[r];
    pc.unbounded_losses = unbounded[r];
    if (truth_unbounded > 0) {
      pc.misreport = unbounded[r] > 0 ? InterimEstimate{-inf, 0.0, samples}
                                      : InterimEstimate{mis_total[r].mean, mis_total[r].std_error(), samples};
      pc.mean_gain_of_truth = unbounded[r] > 0 ? 0.0 : -inf;
      pc.std_error = 0.0;
    } else if (unbounded[r] > 0) {
      pc.misreport = {-inf, 0.0, samples};
      pc.mean_gain_of_truth = inf;
      pc.std_error = 0.0;
    } else {
      pc.misreport = {mis_total[r].mean, mis_total[r].std_error(), samples};
      pc.mean_gain_of_truth = diff_total[r].mean;
      pc.std_error = diff_total[r].std_error();
    }
  }
  return out;
}

/// Interim utility of a single report row.
template <class Model>
InterimEstimate interim_utility(const Model& model, std::size_t i, std::span<const double> belief_row,
                                std::span<const double> report_row, const PriorSpec& prior,
                                const MonteCarloOptions& opts) {
  return compare_reports(model, i, belief_row, report_row, {}, prior, opts).truth;
}

}  // namespace loanelicit
