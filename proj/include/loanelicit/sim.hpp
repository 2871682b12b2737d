#pragma once

// Multi-round lending simulation: fresh borrowers each round, noisy
// recommender beliefs, a chosen mechanism, Bernoulli repayments and
// outcome-based weight updates. Every round is recorded in an append-only
// newline-delimited JSON ledger that can be replayed bit-exactly.

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "loanelicit/aggregation.hpp"
#include "loanelicit/prior.hpp"
#include "loanelicit/vcg.hpp"
#include "loanelicit/winkler.hpp"

namespace loanelicit {

enum class MechanismKind { Winkler, Vcg };

inline const char* to_string(MechanismKind k) { return k == MechanismKind::Winkler ? "winkler" : "vcg"; }

struct MechanismConfig {
  MechanismKind kind = MechanismKind::Vcg;
  double threshold = 0.5;
  // VCG: the loan cap K. Winkler: optional cap, 0 meaning unconstrained.
  std::size_t liquidity = 1;
  double alpha = 1.0;
  bool tcomp = false;
};

namespace truth {
struct Uniform {};
struct Fixed {
  std::vector<double> probabilities;  // one per borrower
};
struct Beta {
  double a = 1.0;
  double b = 1.0;
};
}  // namespace truth

using TruthModel = std::variant<truth::Uniform, truth::Fixed, truth::Beta>;

/// Recommender i believes lambda_i * truth + (1 - lambda_i) * noise with
/// independent uniform noise per borrower.
struct WorldModel {
  TruthModel truth = truth::Uniform{};
  std::vector<double> mixing;
};

enum class WeightMode { Fixed, Budescu };

struct CampaignConfig {
  std::size_t recommenders = 1;
  std::size_t borrowers = 1;
  MechanismConfig mechanism;
  WorldModel world;
  WeightMode weight_mode = WeightMode::Fixed;
  WeightVector initial_weights = WeightVector::equal(1);
  // Budescu history length in rounds; 0 keeps every past round.
  std::size_t window = 0;
  BudescuConstants budescu;
  // Per-recommender additive report distortion, clamped to [0,1]; empty
  // means truthful reporting.
  std::vector<double> report_shift;
};

inline void validate(const CampaignConfig& cfg) {
  if (cfg.recommenders == 0 || cfg.borrowers == 0) {
    throw Error(ErrorCode::Validation, "campaign needs at least one recommender and one borrower");
  }
  if (cfg.world.mixing.size() != cfg.recommenders) {
    throw Error(ErrorCode::Validation, "world.mixing needs one coefficient per recommender");
  }
  for (double l : cfg.world.mixing) {
    if (!is_probability(l)) throw Error(ErrorCode::Validation, "mixing coefficients must lie in [0,1]");
  }
  if (const auto* f = std::get_if<truth::Fixed>(&cfg.world.truth)) {
    if (f->probabilities.size() != cfg.borrowers) {
      throw Error(ErrorCode::Validation, "fixed truth needs one probability per borrower");
    }
    for (double p : f->probabilities) check_probability(p, "true repayment probability");
  }
  if (const auto* b = std::get_if<truth::Beta>(&cfg.world.truth)) {
    if (!(b->a > 0.0 && b->b > 0.0)) throw Error(ErrorCode::Validation, "beta truth parameters must be positive");
  }
  if (cfg.initial_weights.size() != cfg.recommenders) {
    throw Error(ErrorCode::Validation, "initial weights have the wrong arity");
  }
  if (!cfg.report_shift.empty() && cfg.report_shift.size() != cfg.recommenders) {
    throw Error(ErrorCode::Validation, "report_shift needs one entry per recommender");
  }
  const MechanismConfig& mc = cfg.mechanism;
  if (mc.kind == MechanismKind::Vcg) {
    VcgInstance probe{cfg.recommenders, cfg.borrowers, mc.liquidity, mc.threshold, cfg.initial_weights, mc.alpha,
                      mc.tcomp};
    validate(probe);
  } else {
    ScoreThreshold check(mc.threshold);
    (void)check;
    if (mc.liquidity > cfg.borrowers) throw Error(ErrorCode::Validation, "liquidity exceeds borrower count");
  }
}

// ---------------------------------------------------------------------------
// Canonical serialization and hashing.

inline nlohmann::json to_json(const CampaignConfig& cfg) {
  using nlohmann::json;
  json truth_json;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, truth::Uniform>) {
          truth_json = {{"kind", "uniform"}};
        } else if constexpr (std::is_same_v<T, truth::Fixed>) {
          truth_json = {{"kind", "fixed"}, {"probabilities", t.probabilities}};
        } else {
          truth_json = {{"kind", "beta"}, {"a", t.a}, {"b", t.b}};
        }
      },
      cfg.world.truth);
  std::vector<double> w(cfg.initial_weights.values().begin(), cfg.initial_weights.values().end());
  return json{{"recommenders", cfg.recommenders},
              {"borrowers", cfg.borrowers},
              {"mechanism",
               {{"kind", to_string(cfg.mechanism.kind)},
                {"threshold", cfg.mechanism.threshold},
                {"liquidity", cfg.mechanism.liquidity},
                {"alpha", cfg.mechanism.alpha},
                {"tcomp", cfg.mechanism.tcomp}}},
              {"world", {{"truth", truth_json}, {"mixing", cfg.world.mixing}}},
              {"weight_mode", cfg.weight_mode == WeightMode::Budescu ? "budescu" : "fixed"},
              {"initial_weights", w},
              {"window", cfg.window},
              {"budescu", {{"a", cfg.budescu.a}, {"b", cfg.budescu.b}}},
              {"report_shift", cfg.report_shift}};
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string scenario_hash(const CampaignConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json(cfg).dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Rounds.

inline constexpr int kLedgerSchemaVersion = 1;

struct LedgerRecord {
  int schema_version = kLedgerSchemaVersion;
  std::size_t round = 0;
  std::string scenario_hash;
  std::uint64_t seed = 0;  // campaign seed; the round stream is derived from (seed, round)
  std::string mechanism;
  std::vector<double> weights;
  std::vector<double> truth;
  BeliefProfile beliefs;
  BeliefProfile reports;
  Allocation allocation;
  OutcomeVector outcomes;
  SettlementResult settlement;
  double deficit = 0.0;

  friend bool operator==(const LedgerRecord& a, const LedgerRecord& b) {
    return a.schema_version == b.schema_version && a.round == b.round && a.scenario_hash == b.scenario_hash &&
           a.seed == b.seed && a.mechanism == b.mechanism && a.weights == b.weights && a.truth == b.truth &&
           a.beliefs == b.beliefs && a.reports == b.reports && a.allocation == b.allocation &&
           a.outcomes == b.outcomes && a.settlement.immediate == b.settlement.immediate &&
           a.settlement.contingent == b.settlement.contingent && a.settlement.tcomp == b.settlement.tcomp &&
           a.settlement.allocation == b.settlement.allocation && a.deficit == b.deficit;
  }
};

inline double sample_truth(const TruthModel& model, std::size_t q, Rng& rng) {
  if (const auto* f = std::get_if<truth::Fixed>(&model)) return f->probabilities[q];
  if (const auto* b = std::get_if<truth::Beta>(&model)) return sample_beta(rng, b->a, b->b);
  return uniform01(rng);
}

/// One round with the given weights in force. All randomness comes from
/// the stream derived from (seed, round).
inline LedgerRecord run_round(const CampaignConfig& cfg, const WeightVector& weights, std::size_t round,
                              std::uint64_t seed, const std::string& hash) {
  if (weights.size() != cfg.recommenders) throw Error(ErrorCode::ArityMismatch, "weights do not match recommenders");
  const std::size_t n = cfg.recommenders;
  const std::size_t m = cfg.borrowers;
  Rng rng(derive_seed(seed, round));

  LedgerRecord rec;
  rec.round = round;
  rec.scenario_hash = hash;
  rec.seed = seed;
  rec.mechanism = to_string(cfg.mechanism.kind);
  rec.weights.assign(weights.values().begin(), weights.values().end());
  rec.truth.resize(m);
  for (std::size_t q = 0; q < m; ++q) rec.truth[q] = sample_truth(cfg.world.truth, q, rng);
  rec.beliefs = BeliefProfile(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = cfg.world.mixing[i];
    for (std::size_t q = 0; q < m; ++q) {
      const double noise = uniform01(rng);
      rec.beliefs(i, q) = std::clamp(l * rec.truth[q] + (1.0 - l) * noise, 0.0, 1.0);
    }
  }
  rec.reports = rec.beliefs;
  if (!cfg.report_shift.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t q = 0; q < m; ++q) rec.reports(i, q) = std::clamp(rec.beliefs(i, q) + cfg.report_shift[i], 0.0, 1.0);
    }
  }

  const MechanismConfig& mc = cfg.mechanism;
  if (mc.kind == MechanismKind::Vcg) {
    const VcgInstance inst{n, m, mc.liquidity, mc.threshold, weights, mc.alpha, mc.tcomp};
    rec.allocation = allocate_vcg(inst, rec.reports);
  } else {
    WinklerInstance inst{n, m, ScoreThreshold(mc.threshold), WeightedLinear{weights}, std::nullopt};
    if (mc.liquidity > 0) inst.liquidity = mc.liquidity;
    rec.allocation = allocate_winkler(inst, rec.reports);
  }
  rec.outcomes.assign(m, std::nullopt);
  for (std::size_t q = 0; q < m; ++q) {
    // Draw for every borrower so the stream does not depend on the allocation.
    const double u = uniform01(rng);
    if (rec.allocation.funded[q]) rec.outcomes[q] = u < rec.truth[q] ? Outcome::Repaid : Outcome::Default;
  }
  if (mc.kind == MechanismKind::Vcg) {
    const VcgInstance inst{n, m, mc.liquidity, mc.threshold, weights, mc.alpha, mc.tcomp};
    rec.settlement = settle_vcg(inst, rec.reports, rec.outcomes);
  } else {
    WinklerInstance inst{n, m, ScoreThreshold(mc.threshold), WeightedLinear{weights}, std::nullopt};
    if (mc.liquidity > 0) inst.liquidity = mc.liquidity;
    rec.settlement = settle_winkler(inst, rec.reports, rec.outcomes);
  }
  rec.deficit = deficit(rec.settlement);
  return rec;
}

/// Budescu history of funded borrowers from the given records.
inline RoundHistory history_from(const std::vector<LedgerRecord>& records, std::size_t n, std::size_t window) {
  RoundHistory h;
  h.recommenders = n;
  const std::size_t first = window > 0 && records.size() > window ? records.size() - window : 0;
  for (std::size_t r = first; r < records.size(); ++r) {
    const LedgerRecord& rec = records[r];
    for (std::size_t q = 0; q < rec.outcomes.size(); ++q) {
      if (!rec.outcomes[q]) continue;
      std::vector<std::optional<double>> col(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = rec.reports(i, q);
      h.add(std::move(col), *rec.outcomes[q]);
    }
  }
  return h;
}

/// Weights for the next round from everything recorded so far; equal
/// weights until some funded borrower has an outcome.
inline WeightVector evolve_weights(const std::vector<LedgerRecord>& records, std::size_t n, std::size_t window = 0,
                                   const BudescuConstants& k = {}) {
  return budescu_weights_or_equal(history_from(records, n, window), k);
}

/// Recomputes a recorded round and checks it matches bit-exactly.
inline bool replay_round(const CampaignConfig& cfg, const LedgerRecord& rec) {
  if (rec.scenario_hash != scenario_hash(cfg)) return false;
  const LedgerRecord again =
      run_round(cfg, WeightVector::unnormalized(rec.weights), rec.round, rec.seed, rec.scenario_hash);
  return again == rec;
}

struct CampaignSummary {
  std::vector<LedgerRecord> records;
  std::size_t funded = 0;
  std::size_t repaid = 0;
  double repayment_rate = 0.0;  // among funded borrowers
  double base_rate = 0.0;       // mean true probability over all borrowers
  double cumulative_deficit = 0.0;
  double min_realized_utility = std::numeric_limits<double>::infinity();
  std::vector<double> cumulative_utility;
  std::vector<std::vector<double>> weight_trajectory;  // weights in force per round
  std::vector<double> terminal_weights;                 // weights for the round after the last
};

inline CampaignSummary campaign(const CampaignConfig& cfg, std::size_t rounds, std::uint64_t seed) {
  validate(cfg);
  if (rounds == 0) throw Error(ErrorCode::InvalidArgument, "campaign needs at least one round");
  const std::string hash = scenario_hash(cfg);
  CampaignSummary s;
  s.cumulative_utility.assign(cfg.recommenders, 0.0);
  double truth_total = 0.0;
  auto weights_now = [&]() {
    if (cfg.weight_mode == WeightMode::Fixed) return cfg.initial_weights;
    if (s.records.empty()) return cfg.initial_weights;
    return evolve_weights(s.records, cfg.recommenders, cfg.window, cfg.budescu);
  };
  for (std::size_t r = 0; r < rounds; ++r) {
    const WeightVector w = weights_now();
    s.weight_trajectory.emplace_back(w.values().begin(), w.values().end());
    LedgerRecord rec = run_round(cfg, w, r, seed, hash);
    for (std::size_t q = 0; q < cfg.borrowers; ++q) {
      truth_total += rec.truth[q];
      if (rec.outcomes[q]) {
        ++s.funded;
        if (*rec.outcomes[q] == Outcome::Repaid) ++s.repaid;
      }
    }
    for (std::size_t i = 0; i < cfg.recommenders; ++i) {
      const double u = rec.settlement.realized_utility(i);
      s.cumulative_utility[i] += u;
      s.min_realized_utility = std::min(s.min_realized_utility, u);
    }
    s.cumulative_deficit += rec.deficit;
    s.records.push_back(std::move(rec));
  }
  const WeightVector last = weights_now();
  s.terminal_weights.assign(last.values().begin(), last.values().end());
  s.repayment_rate = s.funded > 0 ? static_cast<double>(s.repaid) / static_cast<double>(s.funded) : 0.0;
  s.base_rate = truth_total / static_cast<double>(rounds * cfg.borrowers);
  return s;
}

// ---------------------------------------------------------------------------
// Ledger file format: one JSON object per line.

inline nlohmann::json to_json(const LedgerRecord& r) {
  using nlohmann::json;
  json outcomes = json::array();
  for (const auto& o : r.outcomes) outcomes.push_back(o ? json(static_cast<int>(*o)) : json(nullptr));
  return json{{"schema_version", r.schema_version},
              {"round", r.round},
              {"scenario_hash", r.scenario_hash},
              {"seed", r.seed},
              {"mechanism", r.mechanism},
              {"weights", r.weights},
              {"truth", r.truth},
              {"beliefs", r.beliefs.to_rows()},
              {"reports", r.reports.to_rows()},
              {"funded", r.allocation.funded},
              {"reserves_funded", r.allocation.reserves_funded},
              {"outcomes", outcomes},
              {"immediate", r.settlement.immediate},
              {"contingent", r.settlement.contingent},
              {"tcomp", r.settlement.tcomp},
              {"deficit", r.deficit}};
}

inline LedgerRecord ledger_record_from_json(const nlohmann::json& j) {
  LedgerRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kLedgerSchemaVersion) {
    throw Error(ErrorCode::Validation, "unsupported ledger schema version " + std::to_string(r.schema_version));
  }
  r.round = j.at("round").get<std::size_t>();
  r.scenario_hash = j.at("scenario_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mechanism = j.at("mechanism").get<std::string>();
  r.weights = j.at("weights").get<std::vector<double>>();
  r.truth = j.at("truth").get<std::vector<double>>();
  r.beliefs = BeliefProfile::from_rows(j.at("beliefs").get<std::vector<std::vector<double>>>());
  r.reports = BeliefProfile::from_rows(j.at("reports").get<std::vector<std::vector<double>>>());
  r.allocation.funded = j.at("funded").get<std::vector<bool>>();
  r.allocation.reserves_funded = j.at("reserves_funded").get<std::size_t>();
  for (const auto& o : j.at("outcomes")) {
    r.outcomes.push_back(o.is_null() ? std::nullopt : std::optional<Outcome>(outcome_from_int(o.get<int>())));
  }
  r.settlement.allocation = r.allocation;
  r.settlement.immediate = j.at("immediate").get<std::vector<double>>();
  r.settlement.contingent = j.at("contingent").get<std::vector<std::vector<double>>>();
  r.settlement.tcomp = j.at("tcomp").get<std::vector<double>>();
  r.deficit = j.at("deficit").get<double>();
  return r;
}

inline void write_ledger(std::ostream& out, const std::vector<LedgerRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<LedgerRecord> read_ledger(std::istream& in) {
  std::vector<LedgerRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      records.push_back(ledger_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Validation, "ledger line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace loanelicit
