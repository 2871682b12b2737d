#pragma once

// Priors over belief profiles and the seeded random streams used by every
// Monte Carlo routine.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "loanelicit/types.hpp"

namespace loanelicit {

namespace priors {
struct UniformIID {};
struct BetaIID {
  double a = 1.0;
  double b = 1.0;
};
/// Point mass at a fixed profile; Monte Carlo over it is exact.
struct DegenerateAt {
  BeliefProfile profile;
};
/// Independent cells, each uniform over a finite support. `support` is
/// row-major, one list per (recommender, borrower) cell.
struct ProductGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> support;

  const std::vector<double>& cell(std::size_t i, std::size_t q) const { return support[i * cols + q]; }
};
}  // namespace priors

using PriorSpec = std::variant<priors::UniformIID, priors::BetaIID, priors::DegenerateAt, priors::ProductGrid>;

inline bool is_degenerate(const PriorSpec& prior) { return std::holds_alternative<priors::DegenerateAt>(prior); }

inline void validate_prior(const PriorSpec& prior, std::size_t n, std::size_t m) {
  if (const auto* beta = std::get_if<priors::BetaIID>(&prior)) {
    if (!(beta->a > 0.0) || !(beta->b > 0.0) || !std::isfinite(beta->a) || !std::isfinite(beta->b)) {
      throw Error(ErrorCode::InvalidArgument, "beta prior parameters must be positive and finite");
    }
  } else if (const auto* point = std::get_if<priors::DegenerateAt>(&prior)) {
    if (point->profile.rows() != n || point->profile.cols() != m) {
      throw Error(ErrorCode::ShapeMismatch, "degenerate prior profile is " + std::to_string(point->profile.rows()) +
                                                "x" + std::to_string(point->profile.cols()) + ", expected " +
                                                std::to_string(n) + "x" + std::to_string(m));
    }
    validate_probabilities(point->profile);
  } else if (const auto* grid = std::get_if<priors::ProductGrid>(&prior)) {
    if (grid->rows != n || grid->cols != m || grid->support.size() != n * m) {
      throw Error(ErrorCode::ShapeMismatch, "product-grid prior does not match a " + std::to_string(n) + "x" +
                                                std::to_string(m) + " profile");
    }
    for (const auto& cell : grid->support) {
      if (cell.empty()) throw Error(ErrorCode::InvalidArgument, "product-grid prior has an empty support cell");
      for (double p : cell) check_probability(p, "product-grid support point");
    }
  }
}

/// splitmix64 finalizer applied to (seed, stream); gives independent,
/// reproducible per-chunk streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

/// Uniform on [0,1) with 53 random bits. Spelled out rather than using
/// std::uniform_real_distribution so streams match across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x + y > 0.0 ? x / (x + y) : 0.5;
}

/// Fills every cell except those of `skip_row` (pass rows() to fill all).
inline void sample_profile_into(const PriorSpec& prior, Rng& rng, BeliefProfile& out, std::size_t skip_row) {
  const std::size_t n = out.rows();
  const std::size_t m = out.cols();
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        for (std::size_t i = 0; i < n; ++i) {
          if (i == skip_row) continue;
          for (std::size_t q = 0; q < m; ++q) {
            if constexpr (std::is_same_v<P, priors::UniformIID>) {
              out(i, q) = uniform01(rng);
            } else if constexpr (std::is_same_v<P, priors::BetaIID>) {
              out(i, q) = sample_beta(rng, p.a, p.b);
            } else if constexpr (std::is_same_v<P, priors::DegenerateAt>) {
              out(i, q) = p.profile(i, q);
            } else {
              const auto& cell = p.cell(i, q);
              out(i, q) = cell[static_cast<std::size_t>(rng() % cell.size())];
            }
          }
        }
      },
      prior);
}

inline BeliefProfile sample_profile(const PriorSpec& prior, std::size_t n, std::size_t m, Rng& rng) {
  BeliefProfile out(n, m);
  sample_profile_into(prior, rng, out, n);
  return out;
}

}  // namespace loanelicit
