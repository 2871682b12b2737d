#pragma once

// Scenario files: JSON documents describing an instance, its beliefs or
// prior, audit settings, reference values, curve requests and campaign
// worlds. Every field is validated at load time and errors name the field.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loanelicit/audit.hpp"
#include "loanelicit/scoring.hpp"
#include "loanelicit/sim.hpp"

namespace loanelicit {

inline constexpr int kScenarioSchemaVersion = 1;

struct CurveSpec {
  std::vector<MechanismVariant> variants;
  double threshold = 0.5;
  std::size_t grid = 101;
};

struct AuditSpec {
  std::optional<std::size_t> recommender;  // default: every recommender
  std::vector<std::vector<double>> rows;   // true belief rows for interim audits
  std::vector<MisreportStrategy> strategies;
  std::size_t samples = 100000;
  bool exclude_equal_shifts = false;
  std::size_t instances = 50;  // random instances when no beliefs are fixed
  double weight_factor = 1.5;
  std::size_t no_veto_samples = 100000;
  std::map<std::string, Verdict> expect;  // desideratum name -> expected verdict
};

struct CampaignSpec {
  WorldModel world;
  std::size_t rounds = 50;
  std::size_t window = 0;
  std::vector<double> report_shift;
  std::vector<double> alpha_sweep;
};

enum class WeightSource { Equal, Explicit, Budescu };

struct Scenario {
  std::string name;
  std::string source;
  std::optional<MechanismKind> mechanism;
  std::size_t recommenders = 0;
  std::size_t borrowers = 0;
  double threshold = 0.5;
  std::optional<std::size_t> liquidity;
  double alpha = 1.0;
  bool tcomp = false;
  WeightSource weight_source = WeightSource::Equal;
  WeightVector weights;
  std::optional<BeliefProfile> beliefs;
  std::optional<PriorSpec> prior;
  std::optional<OutcomeVector> outcomes;
  std::uint64_t seed = 1;
  AuditSpec audit;
  std::optional<CounterexampleSpec> reference;
  std::optional<CurveSpec> curves;
  std::optional<CampaignSpec> campaign;
};

namespace detail {

[[noreturn]] inline void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Validation, "field '" + field + "': " + what);
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    field_error(path + key, e.what());
  }
}

template <class T>
std::optional<T> opt_field(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_field<T>(j, key, path);
}

inline std::vector<std::vector<double>> matrix_field(const nlohmann::json& j, const std::string& key,
                                                     const std::string& path) {
  auto rows = get_field<std::vector<std::vector<double>>>(j, key, path);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (!is_probability(rows[r][c])) {
        field_error(path + key + "[" + std::to_string(r) + "][" + std::to_string(c) + "]", "must lie in [0,1]");
      }
    }
  }
  return rows;
}

inline Verdict parse_verdict(const std::string& s, const std::string& field) {
  if (s == "pass") return Verdict::Pass;
  if (s == "violation") return Verdict::Violation;
  if (s == "inconclusive") return Verdict::Inconclusive;
  field_error(field, "expected pass, violation or inconclusive, got '" + s + "'");
}

inline PriorSpec parse_prior(const nlohmann::json& j, std::size_t n, std::size_t m) {
  const std::string kind = get_field<std::string>(j, "kind", "prior.");
  if (kind == "uniform") return priors::UniformIID{};
  if (kind == "beta") {
    priors::BetaIID b{get_field<double>(j, "a", "prior."), get_field<double>(j, "b", "prior.")};
    if (!(b.a > 0.0 && b.b > 0.0)) field_error("prior", "beta parameters must be positive");
    return b;
  }
  if (kind == "grid") {
    priors::ProductGrid g;
    g.rows = n;
    g.cols = m;
    const auto values = get_field<std::vector<double>>(j, "support", "prior.");
    if (values.empty()) field_error("prior.support", "must not be empty");
    for (double v : values) {
      if (!is_probability(v)) field_error("prior.support", "entries must lie in [0,1]");
    }
    g.support.assign(n * m, values);
    return g;
  }
  field_error("prior.kind", "expected uniform, beta or grid, got '" + kind + "'");
}

inline MisreportStrategy parse_strategy(const nlohmann::json& j, std::size_t idx, std::size_t m) {
  const std::string path = "audit.strategies[" + std::to_string(idx) + "].";
  const std::string kind = get_field<std::string>(j, "kind", path);
  if (kind == "grid") {
    strategies::SingleCoordinateGrid s;
    s.points = opt_field<std::size_t>(j, "points", path).value_or(101);
    if (s.points < 2) field_error(path + "points", "must be at least 2");
    return s;
  }
  if (kind == "random") {
    strategies::FullRowRandom s;
    s.count = opt_field<std::size_t>(j, "count", path).value_or(200);
    s.seed = opt_field<std::uint64_t>(j, "seed", path).value_or(7);
    return s;
  }
  if (kind == "equal-shift") return strategies::EqualShift{get_field<double>(j, "delta", path)};
  if (kind == "targeted") {
    auto row = get_field<std::vector<double>>(j, "row", path);
    if (row.size() != m) field_error(path + "row", "needs " + std::to_string(m) + " entries");
    for (double p : row) {
      if (!is_probability(p)) field_error(path + "row", "entries must lie in [0,1]");
    }
    return strategies::Targeted{std::move(row)};
  }
  field_error(path + "kind", "expected grid, random, equal-shift or targeted, got '" + kind + "'");
}

inline TruthModel parse_truth(const nlohmann::json& j, std::size_t m) {
  const std::string kind = get_field<std::string>(j, "kind", "world.truth.");
  if (kind == "uniform") return truth::Uniform{};
  if (kind == "fixed") {
    auto p = get_field<std::vector<double>>(j, "probabilities", "world.truth.");
    if (p.size() != m) field_error("world.truth.probabilities", "needs one entry per borrower");
    for (double x : p) {
      if (!is_probability(x)) field_error("world.truth.probabilities", "entries must lie in [0,1]");
    }
    return truth::Fixed{std::move(p)};
  }
  if (kind == "beta") return truth::Beta{get_field<double>(j, "a", "world.truth."), get_field<double>(j, "b", "world.truth.")};
  field_error("world.truth.kind", "expected uniform, fixed or beta, got '" + kind + "'");
}

}  // namespace detail

inline Scenario parse_scenario(const nlohmann::json& j, const std::string& source = "<memory>") {
  using detail::field_error;
  using detail::get_field;
  using detail::opt_field;
  if (!j.is_object()) field_error("<root>", "scenario must be a JSON object");
  Scenario s;
  s.source = source;
  const int version = get_field<int>(j, "schema_version", "");
  if (version != kScenarioSchemaVersion) field_error("schema_version", "unsupported version " + std::to_string(version));
  s.name = opt_field<std::string>(j, "name", "").value_or(source);
  s.seed = opt_field<std::uint64_t>(j, "seed", "").value_or(1);

  if (j.contains("curves")) {
    const auto& cj = j.at("curves");
    CurveSpec c;
    for (const auto& v : get_field<std::vector<std::string>>(cj, "variants", "curves.")) {
      auto parsed = parse_variant(v);
      if (!parsed) field_error("curves.variants", "unknown variant '" + v + "'");
      c.variants.push_back(*parsed);
    }
    if (c.variants.empty()) field_error("curves.variants", "must not be empty");
    c.threshold = get_field<double>(cj, "threshold", "curves.");
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) field_error("curves.threshold", "must lie in (0,1)");
    c.grid = opt_field<std::size_t>(cj, "grid", "curves.").value_or(101);
    if (c.grid < 2) field_error("curves.grid", "must be at least 2");
    s.curves = std::move(c);
  }

  if (!j.contains("mechanism")) {
    if (!s.curves) field_error("mechanism", "required unless the scenario only requests curves");
    return s;
  }
  const std::string mech = get_field<std::string>(j, "mechanism", "");
  if (mech == "winkler") {
    s.mechanism = MechanismKind::Winkler;
  } else if (mech == "vcg") {
    s.mechanism = MechanismKind::Vcg;
  } else {
    field_error("mechanism", "expected winkler or vcg, got '" + mech + "'");
  }
  s.recommenders = get_field<std::size_t>(j, "recommenders", "");
  s.borrowers = get_field<std::size_t>(j, "borrowers", "");
  if (s.recommenders == 0) field_error("recommenders", "must be at least 1");
  if (s.borrowers == 0) field_error("borrowers", "must be at least 1");
  const std::size_t n = s.recommenders;
  const std::size_t m = s.borrowers;

  s.threshold = get_field<double>(j, "threshold", "");
  if (*s.mechanism == MechanismKind::Vcg) {
    if (!(s.threshold >= 0.0 && s.threshold < 1.0)) field_error("threshold", "must lie in [0,1) for vcg");
  } else if (!(s.threshold > 0.0 && s.threshold < 1.0)) {
    field_error("threshold", "must lie in (0,1) for winkler");
  }
  s.liquidity = opt_field<std::size_t>(j, "liquidity", "");
  if (s.liquidity) {
    if (*s.liquidity == 0) field_error("liquidity", "must be at least 1");
    if (*s.liquidity > m) field_error("liquidity", "K=" + std::to_string(*s.liquidity) + " exceeds m=" + std::to_string(m));
  }
  if (*s.mechanism == MechanismKind::Vcg && !s.liquidity) field_error("liquidity", "required for vcg");
  s.alpha = opt_field<double>(j, "alpha", "").value_or(1.0);
  if (!(s.alpha > 0.0) || !std::isfinite(s.alpha)) field_error("alpha", "must be positive");
  s.tcomp = opt_field<bool>(j, "tcomp", "").value_or(false);

  if (!j.contains("weights") || (j.at("weights").is_string() && j.at("weights").get<std::string>() == "equal")) {
    s.weight_source = WeightSource::Equal;
    s.weights = WeightVector::equal(n);
  } else if (j.at("weights").is_string()) {
    if (j.at("weights").get<std::string>() != "budescu") field_error("weights", "expected \"equal\", \"budescu\" or a list");
    s.weight_source = WeightSource::Budescu;
    s.weights = WeightVector::equal(n);
  } else {
    auto w = get_field<std::vector<double>>(j, "weights", "");
    if (w.size() != n) field_error("weights", "needs " + std::to_string(n) + " entries");
    try {
      s.weights = WeightVector::normalized(std::move(w));
    } catch (const Error& e) {
      field_error("weights", e.what());
    }
    s.weight_source = WeightSource::Explicit;
  }

  if (j.contains("beliefs")) {
    auto rows = detail::matrix_field(j, "beliefs", "");
    if (rows.size() != n) field_error("beliefs", "needs " + std::to_string(n) + " rows");
    for (std::size_t r = 0; r < n; ++r) {
      if (rows[r].size() != m) field_error("beliefs[" + std::to_string(r) + "]", "needs " + std::to_string(m) + " entries");
    }
    s.beliefs = BeliefProfile::from_rows(rows);
  }
  if (j.contains("prior")) s.prior = detail::parse_prior(j.at("prior"), n, m);
  if (j.contains("outcomes")) {
    const auto& oj = j.at("outcomes");
    if (!oj.is_array() || oj.size() != m) field_error("outcomes", "needs one entry (0, 1 or null) per borrower");
    OutcomeVector o;
    for (std::size_t q = 0; q < m; ++q) {
      if (oj[q].is_null()) {
        o.push_back(std::nullopt);
      } else if (oj[q].is_number_integer() && (oj[q].get<int>() == 0 || oj[q].get<int>() == 1)) {
        o.push_back(outcome_from_int(oj[q].get<int>()));
      } else {
        field_error("outcomes[" + std::to_string(q) + "]", "must be 0, 1 or null");
      }
    }
    s.outcomes = std::move(o);
  }

  if (j.contains("audit")) {
    const auto& aj = j.at("audit");
    AuditSpec& a = s.audit;
    a.recommender = opt_field<std::size_t>(aj, "recommender", "audit.");
    if (a.recommender && *a.recommender >= n) field_error("audit.recommender", "out of range");
    if (aj.contains("rows")) {
      a.rows = detail::matrix_field(aj, "rows", "audit.");
      for (const auto& r : a.rows) {
        if (r.size() != m) field_error("audit.rows", "each row needs " + std::to_string(m) + " entries");
      }
    }
    if (aj.contains("strategies")) {
      const auto& sj = aj.at("strategies");
      if (!sj.is_array()) field_error("audit.strategies", "must be a list");
      for (std::size_t k = 0; k < sj.size(); ++k) a.strategies.push_back(detail::parse_strategy(sj[k], k, m));
    }
    a.samples = opt_field<std::size_t>(aj, "samples", "audit.").value_or(a.samples);
    if (a.samples == 0) field_error("audit.samples", "must be positive");
    a.exclude_equal_shifts = opt_field<bool>(aj, "exclude_equal_shifts", "audit.").value_or(false);
    a.instances = opt_field<std::size_t>(aj, "instances", "audit.").value_or(a.instances);
    a.weight_factor = opt_field<double>(aj, "weight_factor", "audit.").value_or(a.weight_factor);
    if (!(a.weight_factor > 1.0)) field_error("audit.weight_factor", "must exceed 1");
    a.no_veto_samples = opt_field<std::size_t>(aj, "no_veto_samples", "audit.").value_or(a.no_veto_samples);
    if (aj.contains("expect")) {
      for (const auto& [key, value] : aj.at("expect").items()) {
        if (!parse_desideratum(key) && key != "no-veto") field_error("audit.expect." + key, "unknown desideratum");
        a.expect[key] = detail::parse_verdict(value.get<std::string>(), "audit.expect." + key);
      }
    }
  }
  if (s.audit.strategies.empty()) {
    s.audit.strategies = {strategies::SingleCoordinateGrid{101}, strategies::FullRowRandom{200, 7}};
  }

  if (j.contains("reference")) {
    const auto& rj = j.at("reference");
    if (!s.beliefs) field_error("reference", "requires fixed beliefs");
    CounterexampleSpec c;
    c.beliefs = *s.beliefs;
    c.threshold = s.threshold;
    c.liquidity = s.liquidity.value_or(m);
    c.deviator = get_field<std::size_t>(rj, "deviator", "reference.");
    c.borrower = get_field<std::size_t>(rj, "borrower", "reference.");
    if (c.deviator >= n) field_error("reference.deviator", "out of range");
    if (c.borrower >= m) field_error("reference.borrower", "out of range");
    c.misreport = get_field<double>(rj, "misreport", "reference.");
    c.honest_reference = opt_field<std::vector<double>>(rj, "honest", "reference.").value_or(std::vector<double>{});
    c.misreport_reference =
        opt_field<std::vector<double>>(rj, "misreport_utility", "reference.").value_or(std::vector<double>{});
    c.threshold_reference =
        opt_field<std::vector<std::vector<double>>>(rj, "thresholds", "reference.").value_or(std::vector<std::vector<double>>{});
    c.tolerance = opt_field<double>(rj, "tolerance", "reference.").value_or(0.005);
    s.reference = std::move(c);
  }

  if (j.contains("world")) {
    const auto& wj = j.at("world");
    CampaignSpec c;
    c.world.truth = wj.contains("truth") ? detail::parse_truth(wj.at("truth"), m) : TruthModel{truth::Uniform{}};
    c.world.mixing = get_field<std::vector<double>>(wj, "mixing", "world.");
    if (c.world.mixing.size() != n) field_error("world.mixing", "needs one coefficient per recommender");
    for (double l : c.world.mixing) {
      if (!is_probability(l)) field_error("world.mixing", "coefficients must lie in [0,1]");
    }
    c.rounds = opt_field<std::size_t>(j, "rounds", "").value_or(50);
    if (c.rounds == 0) field_error("rounds", "must be at least 1");
    c.window = opt_field<std::size_t>(j, "window", "").value_or(0);
    c.report_shift = opt_field<std::vector<double>>(j, "report_shift", "").value_or(std::vector<double>{});
    if (!c.report_shift.empty() && c.report_shift.size() != n) field_error("report_shift", "needs one entry per recommender");
    c.alpha_sweep = opt_field<std::vector<double>>(j, "alpha_sweep", "").value_or(std::vector<double>{});
    for (double a : c.alpha_sweep) {
      if (!(a > 0.0)) field_error("alpha_sweep", "entries must be positive");
    }
    s.campaign = std::move(c);
  }
  return s;
}

/// Byte offset to "line L, column C" for parse errors.
inline std::string describe_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Validation, "cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Validation, path + ": " + describe_offset(text, e.byte > 0 ? e.byte - 1 : 0) +
                                           ": malformed JSON");
  }
  try {
    return parse_scenario(j, path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Validation, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Instances built from a scenario.

inline WinklerInstance winkler_instance(const Scenario& s) {
  WinklerInstance inst{s.recommenders, s.borrowers, ScoreThreshold(s.threshold), WeightedLinear{s.weights},
                       s.liquidity};
  validate(inst);
  return inst;
}

inline VcgInstance vcg_instance(const Scenario& s) {
  VcgInstance inst{s.recommenders, s.borrowers, s.liquidity.value_or(s.borrowers), s.threshold, s.weights, s.alpha,
                   s.tcomp};
  validate(inst);
  return inst;
}

inline CampaignConfig campaign_config(const Scenario& s) {
  if (!s.campaign) throw Error(ErrorCode::Validation, "scenario has no world block for a campaign");
  CampaignConfig c;
  c.recommenders = s.recommenders;
  c.borrowers = s.borrowers;
  c.mechanism.kind = s.mechanism.value_or(MechanismKind::Vcg);
  c.mechanism.threshold = s.threshold;
  c.mechanism.liquidity = s.liquidity.value_or(c.mechanism.kind == MechanismKind::Vcg ? s.borrowers : 0);
  c.mechanism.alpha = s.alpha;
  c.mechanism.tcomp = s.tcomp;
  c.world = s.campaign->world;
  c.weight_mode = s.weight_source == WeightSource::Budescu ? WeightMode::Budescu : WeightMode::Fixed;
  c.initial_weights = s.weights;
  c.window = s.campaign->window;
  c.report_shift = s.campaign->report_shift;
  validate(c);
  return c;
}

}  // namespace loanelicit
