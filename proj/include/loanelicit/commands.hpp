#pragma once

// Subcommand implementations behind the loanelicit executable. Each writes
// human-readable text to `out` and returns the process exit code.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "loanelicit/audit.hpp"
#include "loanelicit/scenario.hpp"
#include "loanelicit/sim.hpp"

namespace loanelicit {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitViolation = 2, kExitInconclusive = 3 };

struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::size_t workers = 1;
  std::string out_dir = ".";
  std::optional<MechanismKind> mechanism;
  std::optional<std::size_t> rounds;
  std::vector<double> alpha_sweep;
};

namespace detail {

inline std::string fmt(double x, int precision = 6) {
  if (x == std::numeric_limits<double>::infinity()) return "inf";
  if (x == -std::numeric_limits<double>::infinity()) return "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, x);
  return buf;
}

inline std::string fmt_row(std::span<const double> row, int precision = 6) {
  std::string s;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (k) s += ' ';
    s += fmt(row[k], precision);
  }
  return s;
}

inline std::string funded_list(const Allocation& a) {
  std::string s;
  for (std::size_t q = 0; q < a.funded.size(); ++q) {
    if (!a.funded[q]) continue;
    if (!s.empty()) s += ' ';
    s += std::to_string(q + 1);
  }
  return s.empty() ? "none" : s;
}

inline std::filesystem::path ensure_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline int exit_for(Verdict got, std::optional<Verdict> expected) {
  if (expected) {
    if (got == *expected) return kExitOk;
    return got == Verdict::Inconclusive ? kExitInconclusive : kExitViolation;
  }
  switch (got) {
    case Verdict::Pass: return kExitOk;
    case Verdict::Violation: return kExitViolation;
    case Verdict::Inconclusive: return kExitInconclusive;
  }
  return kExitViolation;
}

inline void print_verdict_line(std::ostream& out, const std::string& name, Verdict got,
                               std::optional<Verdict> expected) {
  out << name << ": " << to_string(got);
  if (expected) out << (got == *expected ? " (expected)" : std::string(" (expected ") + to_string(*expected) + ")");
  out << '\n';
}

inline MechanismKind mechanism_of(const Scenario& s, const CommandOptions& opts) {
  if (opts.mechanism) return *opts.mechanism;
  if (!s.mechanism) throw Error(ErrorCode::Validation, s.source + ": scenario does not name a mechanism");
  return *s.mechanism;
}

inline std::vector<std::size_t> audited_recommenders(const Scenario& s) {
  if (s.audit.recommender) return {*s.audit.recommender};
  std::vector<std::size_t> all(s.recommenders);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

// Fixed beliefs if present, otherwise `count` profiles drawn from the prior
// (uniform when none is given).
inline std::vector<BeliefProfile> audit_profiles(const Scenario& s, std::size_t count, std::uint64_t seed) {
  if (s.beliefs) return {*s.beliefs};
  const PriorSpec prior = s.prior.value_or(PriorSpec{priors::UniformIID{}});
  Rng rng(derive_seed(seed, 0x5eed));
  std::vector<BeliefProfile> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_profile(prior, s.recommenders, s.borrowers, rng));
  return out;
}

inline void print_counterexample(std::ostream& out, const CounterexampleReport& r) {
  const std::size_t n = r.beliefs.rows();
  const std::size_t m = r.beliefs.cols();
  out << "beliefs:\n";
  for (std::size_t i = 0; i < n; ++i) out << "  recommender " << i + 1 << ": " << fmt_row(r.beliefs.row(i), 2) << '\n';
  out << "aggregates honest:    " << fmt_row(r.honest_aggregates, 4) << "  funded " << funded_list(r.honest_allocation)
      << '\n';
  out << "aggregates misreport: " << fmt_row(r.misreport_aggregates, 4) << "  funded "
      << funded_list(r.misreport_allocation) << '\n';
  for (std::size_t q = 0; q < m; ++q) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = r.thresholds(i, q);
    out << "thresholds borrower " << q + 1 << ": " << fmt_row(col, 4) << '\n';
  }
  out << "expected utility honest:    " << fmt_row(r.honest_utility) << '\n';
  out << "expected utility misreport: " << fmt_row(r.misreport_utility) << '\n';
  out << "max deviation from reference: " << fmt(r.max_abs_error) << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_curves(const CurveSpec& spec, const CommandOptions& opts, std::ostream& out) {
  const ScoreThreshold c(spec.threshold);
  const auto dir = detail::ensure_dir(opts.out_dir);
  for (MechanismVariant v : spec.variants) {
    const auto curve = utility_curve(c, v, spec.grid);
    const std::string file = std::string("curve_") + to_string(v) + "_c" + detail::fmt(spec.threshold, 2) + ".csv";
    std::ofstream csv(dir / file);
    csv << "belief,utility,threshold_deviation\n";
    for (const auto& p : curve) {
      csv << detail::fmt(p.belief, 6) << ',' << detail::fmt(p.utility, 12) << ',' << detail::fmt(p.threshold_deviation, 12)
          << '\n';
    }
    const GridDeviation dev = best_grid_deviation(c, v, spec.grid);
    out << to_string(v) << " c=" << detail::fmt(spec.threshold, 2) << ": U(0)=" << detail::fmt(curve.front().utility)
        << " U(c)=" << detail::fmt(truthful_mechanism_utility(c, spec.threshold, v))
        << " U(1)=" << detail::fmt(curve.back().utility)
        << " convex=" << (is_midpoint_convex(curve) ? "yes" : "no");
    if (dev.gain > 1e-12) {
      out << " best-deviation belief=" << detail::fmt(dev.belief, 2) << " report=" << detail::fmt(dev.report, 2)
          << " gain=" << detail::fmt(dev.gain);
    } else {
      out << " no profitable grid deviation";
    }
    out << " -> " << file << '\n';
  }
  return kExitOk;
}

inline int cmd_run(const Scenario& s, const CommandOptions& opts, std::ostream& out) {
  const MechanismKind kind = detail::mechanism_of(s, opts);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  Rng rng(derive_seed(seed, 0));
  BeliefProfile reports;
  if (s.beliefs) {
    reports = *s.beliefs;
  } else if (s.prior) {
    reports = sample_profile(*s.prior, s.recommenders, s.borrowers, rng);
  } else {
    throw Error(ErrorCode::Validation, s.source + ": run needs beliefs or a prior");
  }
  const std::size_t n = s.recommenders;
  const std::size_t m = s.borrowers;

  Allocation alloc;
  std::vector<double> aggregates;
  std::optional<WinklerInstance> w;
  std::optional<VcgInstance> v;
  if (kind == MechanismKind::Winkler) {
    w = winkler_instance(s);
    alloc = allocate_winkler(*w, reports);
    aggregates = winkler_aggregates(*w, reports);
  } else {
    v = vcg_instance(s);
    alloc = allocate_vcg(*v, reports);
    aggregates = vcg_scores(*v, reports);
  }

  // Outcomes from the file, otherwise drawn with repayment probability equal
  // to the lender's aggregate belief.
  OutcomeVector outcomes(m);
  bool sampled = false;
  if (s.outcomes) {
    for (std::size_t q = 0; q < m; ++q) {
      if (alloc.funded[q]) {
        if (!(*s.outcomes)[q]) throw Error(ErrorCode::MissingOutcome, "funded borrower " + std::to_string(q + 1) + " has no outcome in the file");
        outcomes[q] = (*s.outcomes)[q];
      }
    }
  } else {
    sampled = true;
    for (std::size_t q = 0; q < m; ++q) {
      const double u = uniform01(rng);
      if (alloc.funded[q]) outcomes[q] = u < aggregates[q] ? Outcome::Repaid : Outcome::Default;
    }
  }

  out << "scenario: " << s.name << " (" << to_string(kind) << ", n=" << n << ", m=" << m
      << ", c=" << detail::fmt(s.threshold, 4);
  if (s.liquidity) out << ", K=" << *s.liquidity;
  if (kind == MechanismKind::Vcg) out << ", alpha=" << detail::fmt(s.alpha, 4) << ", tcomp=" << (s.tcomp ? "on" : "off");
  out << ")\n";
  out << "aggregates: " << detail::fmt_row(aggregates) << '\n';
  out << "funded: " << detail::funded_list(alloc);
  if (kind == MechanismKind::Vcg && v->has_reserve()) out << " (reserve slots " << alloc.reserves_funded << ")";
  out << '\n';

  SettlementResult r;
  if (w) {
    const auto t = marginal_thresholds(*w, reports);
    out << "marginal thresholds:\n";
    for (std::size_t i = 0; i < n; ++i) {
      out << "  recommender " << i + 1 << ": " << detail::fmt_row(t.row(i), 4) << '\n';
    }
    r = settle_winkler(*w, reports, outcomes);
  } else {
    r = settle_vcg(*v, reports, outcomes);
  }
  out << "expected utility (reports taken as beliefs):\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double u = w ? winkler_expected_utility(*w, reports, i, reports.row(i))
                       : vcg_expected_utility(*v, reports, i, reports.row(i));
    out << "  recommender " << i + 1 << ": " << detail::fmt(u) << '\n';
  }
  out << "outcomes" << (sampled ? " (sampled, seed " + std::to_string(seed) + ")" : "") << ":";
  for (std::size_t q = 0; q < m; ++q) {
    if (outcomes[q]) out << " b" << q + 1 << '=' << (*outcomes[q] == Outcome::Repaid ? "repaid" : "default");
  }
  out << '\n' << "settlement:\n";
  for (std::size_t i = 0; i < n; ++i) {
    out << "  recommender " << i + 1 << ": pays " << detail::fmt(r.immediate[i]) << ", receives "
        << detail::fmt(r.contingent_total(i)) << " contingent + " << detail::fmt(r.tcomp[i])
        << " rebate, realized " << detail::fmt(r.realized_utility(i)) << '\n';
  }
  out << "deficit: " << detail::fmt(deficit(r)) << '\n';
  return kExitOk;
}

namespace detail {

inline Verdict worst(Verdict a, Verdict b) {
  if (a == Verdict::Violation || b == Verdict::Violation) return Verdict::Violation;
  if (a == Verdict::Inconclusive || b == Verdict::Inconclusive) return Verdict::Inconclusive;
  return Verdict::Pass;
}

inline void print_search(std::ostream& out, const std::string& label, const AuditVerdict& v) {
  out << "  " << label << ": " << to_string(v.verdict) << " truth=" << fmt(v.stats.truth_utility)
      << " best-gain=" << fmt(v.stats.max_gain) << " se=" << fmt(v.stats.std_error, 8) << " checked=" << v.stats.checked
      << " losses=" << v.stats.losses << " ties=" << v.stats.ties << " gains=" << v.stats.violations;
  if (v.stats.equal_shifts_excluded) out << " equal-shifts-excluded=" << v.stats.equal_shifts_excluded;
  out << '\n';
  if (v.witness) out << "    witness report: " << fmt_row(v.witness->report_row, 4) << '\n';
}

template <class Model>
Verdict audit_searches(const Scenario& s, const Model& model, Desideratum d, const CommandOptions& opts,
                       std::ostream& out) {
  Verdict overall = Verdict::Pass;
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  MonteCarloOptions mc;
  mc.samples = opts.samples.value_or(s.audit.samples);
  mc.seed = seed;
  mc.workers = opts.workers;
  SearchOptions so;
  so.desideratum = d;
  so.exclude_equal_shifts = s.audit.exclude_equal_shifts;
  if (d == Desideratum::StrictIIC) {
    const PriorSpec prior = s.prior.value_or(PriorSpec{priors::UniformIID{}});
    const std::size_t i = s.audit.recommender.value_or(0);
    std::vector<std::vector<double>> rows = s.audit.rows;
    if (rows.empty() && s.beliefs) rows.emplace_back(s.beliefs->row(i).begin(), s.beliefs->row(i).end());
    if (rows.empty()) throw Error(ErrorCode::Validation, s.source + ": strict-iic needs audit.rows or beliefs");
    out << "recommender " << i + 1 << ", " << mc.samples << " samples per comparison\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const AuditVerdict v = best_response_search(model, i, rows[r], prior, s.audit.strategies, mc, so);
      print_search(out, "belief row " + fmt_row(rows[r], 4), v);
      overall = worst(overall, v.verdict);
    }
    return overall;
  }
  if (!s.beliefs) throw Error(ErrorCode::Validation, s.source + ": ex post audits need fixed beliefs");
  const PriorSpec point = priors::DegenerateAt{*s.beliefs};
  for (std::size_t i : audited_recommenders(s)) {
    const AuditVerdict v = best_response_search(model, i, s.beliefs->row(i), point, s.audit.strategies, mc, so);
    print_search(out, "recommender " + std::to_string(i + 1), v);
    overall = worst(overall, v.verdict);
  }
  return overall;
}

}  // namespace detail

inline int cmd_audit(const Scenario& s, const std::string& desideratum, const CommandOptions& opts,
                     std::ostream& out) {
  const MechanismKind kind = detail::mechanism_of(s, opts);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  std::optional<Verdict> expected;
  if (auto it = s.audit.expect.find(desideratum); it != s.audit.expect.end()) expected = it->second;

  if (desideratum == "no-veto") {
    if (kind != MechanismKind::Winkler) throw Error(ErrorCode::Validation, "no-veto applies to the winkler mechanism");
    const auto inst = winkler_instance(s);
    const PriorSpec prior = s.prior.value_or(PriorSpec{priors::UniformIID{}});
    const auto est = grain_of_no_veto(inst, prior, opts.samples.value_or(s.audit.no_veto_samples), seed);
    out << "no-veto probability P[B_q(0, others) > c], " << est.samples << " samples:\n";
    for (std::size_t i = 0; i < s.recommenders; ++i) {
      out << "  recommender " << i + 1 << ": " << detail::fmt_row(est.probability.row(i), 4) << '\n';
    }
    const Verdict v = est.zero_pairs.empty() ? Verdict::Pass : Verdict::Violation;
    out << "pairs estimated at zero: " << est.zero_pairs.size() << '\n';
    detail::print_verdict_line(out, desideratum, v, expected);
    return detail::exit_for(v, expected);
  }

  const auto d = parse_desideratum(desideratum);
  if (!d) throw Error(ErrorCode::InvalidArgument, "unknown desideratum '" + desideratum + "'");

  Verdict verdict = Verdict::Pass;
  if (*d == Desideratum::WeakEPIC || *d == Desideratum::StrictEPIC || *d == Desideratum::StrictIIC) {
    if (kind == MechanismKind::Winkler) {
      const auto inst = winkler_instance(s);
      if (s.reference && *d != Desideratum::StrictIIC) {
        const CounterexampleReport rep = reproduce_counterexample(*s.reference);
        detail::print_counterexample(out, rep);
      }
      verdict = detail::audit_searches(s, WinklerModel(inst), *d, opts, out);
    } else {
      verdict = detail::audit_searches(s, VcgModel(vcg_instance(s)), *d, opts, out);
    }
  } else if (*d == Desideratum::AllocEff) {
    if (kind != MechanismKind::Vcg) throw Error(ErrorCode::Validation, "alloc-eff audits the vcg mechanism");
    const auto inst = vcg_instance(s);
    std::size_t bad = 0;
    const auto profiles = detail::audit_profiles(s, s.audit.instances, seed);
    for (const auto& p : profiles) {
      if (audit_allocative_efficiency(inst, p).verdict == Verdict::Violation) ++bad;
    }
    out << "profiles checked against brute-force welfare: " << profiles.size() << ", mismatches: " << bad << '\n';
    verdict = bad ? Verdict::Violation : Verdict::Pass;
  } else if (*d == Desideratum::ExPostIR) {
    const auto profiles = detail::audit_profiles(s, s.audit.instances, seed);
    double min_u = std::numeric_limits<double>::infinity();
    for (const auto& p : profiles) {
      const AuditVerdict v = kind == MechanismKind::Vcg ? audit_ex_post_ir(vcg_instance(s), p)
                                                        : audit_ex_post_ir(winkler_instance(s), p);
      min_u = std::min(min_u, v.stats.max_gain);
      verdict = detail::worst(verdict, v.verdict);
    }
    out << "profiles: " << profiles.size() << ", minimum truthful expected utility: " << detail::fmt(min_u) << '\n';
  } else if (*d == Desideratum::StrongExPostIR) {
    if (kind != MechanismKind::Vcg) throw Error(ErrorCode::Validation, "strong-ex-post-ir audits the vcg mechanism");
    const auto inst = vcg_instance(s);
    const auto profiles = detail::audit_profiles(s, s.audit.instances, seed);
    double min_u = std::numeric_limits<double>::infinity();
    std::size_t checked = 0;
    for (const auto& p : profiles) {
      const AuditVerdict v = audit_strong_ex_post_ir(inst, p);
      min_u = std::min(min_u, v.stats.max_gain);
      checked += v.stats.checked;
      verdict = detail::worst(verdict, v.verdict);
    }
    out << "profiles: " << profiles.size() << ", realized utilities checked: " << checked
        << ", minimum: " << detail::fmt(min_u) << '\n';
  } else {
    if (kind != MechanismKind::Vcg) throw Error(ErrorCode::Validation, "weight-monotonicity audits the vcg mechanism");
    const auto inst = vcg_instance(s);
    const auto profiles = detail::audit_profiles(s, s.audit.instances, seed);
    std::size_t applicable = 0;
    std::size_t increases = 0;
    for (const auto& p : profiles) {
      for (std::size_t i : detail::audited_recommenders(s)) {
        const double w = inst.weights[i];
        if (!(w > 0.0)) continue;
        const auto r = weight_monotonicity(inst, p, i, w, w * s.audit.weight_factor);
        if (!r.applicable) continue;
        ++applicable;
        if (r.strictly_increases) ++increases;
        if (s.beliefs) {
          out << "  recommender " << i + 1 << ": U " << detail::fmt(r.utility_low) << " -> "
              << detail::fmt(r.utility_high) << '\n';
        }
      }
    }
    out << "strict increases: " << increases << "/" << applicable << '\n';
    verdict = increases == applicable ? Verdict::Pass : Verdict::Violation;
  }
  detail::print_verdict_line(out, desideratum, verdict, expected);
  return detail::exit_for(verdict, expected);
}

inline int cmd_campaign(const Scenario& s, const CommandOptions& opts, std::ostream& out) {
  CampaignConfig cfg = campaign_config(s);
  if (opts.mechanism) {
    cfg.mechanism.kind = *opts.mechanism;
    validate(cfg);
  }
  const std::size_t rounds = opts.rounds.value_or(s.campaign->rounds);
  const std::uint64_t seed = opts.seed.value_or(s.seed);
  const CampaignSummary sum = campaign(cfg, rounds, seed);
  const auto dir = detail::ensure_dir(opts.out_dir);

  {
    std::ofstream ledger(dir / "ledger.ndjson");
    write_ledger(ledger, sum.records);
  }
  {
    std::ofstream csv(dir / "summary.csv");
    csv << "round,funded,repaid,deficit,cumulative_deficit\n";
    double cum = 0.0;
    for (const auto& r : sum.records) {
      std::size_t funded = 0;
      std::size_t repaid = 0;
      for (const auto& o : r.outcomes) {
        if (!o) continue;
        ++funded;
        if (*o == Outcome::Repaid) ++repaid;
      }
      cum += r.deficit;
      csv << r.round << ',' << funded << ',' << repaid << ',' << detail::fmt(r.deficit, 12) << ','
          << detail::fmt(cum, 12) << '\n';
    }
  }
  {
    std::ofstream csv(dir / "weights.csv");
    csv << "round";
    for (std::size_t i = 0; i < cfg.recommenders; ++i) csv << ",w" << i + 1;
    csv << '\n';
    for (std::size_t r = 0; r < sum.weight_trajectory.size(); ++r) {
      csv << r;
      for (double w : sum.weight_trajectory[r]) csv << ',' << detail::fmt(w, 12);
      csv << '\n';
    }
  }
  std::vector<double> sweep = opts.alpha_sweep.empty() ? s.campaign->alpha_sweep : opts.alpha_sweep;
  if (!sweep.empty()) {
    std::ofstream csv(dir / "alpha_sweep.csv");
    csv << "alpha,cumulative_deficit,funded\n";
    for (double a : sweep) {
      CampaignConfig c = cfg;
      c.mechanism.alpha = a;
      const CampaignSummary ss = campaign(c, rounds, seed);
      csv << detail::fmt(a, 6) << ',' << detail::fmt(ss.cumulative_deficit, 12) << ',' << ss.funded << '\n';
    }
  }

  out << "campaign: " << s.name << " (" << to_string(cfg.mechanism.kind) << ", " << rounds << " rounds, seed " << seed
      << ", scenario hash " << scenario_hash(cfg) << ")\n";
  out << "funded borrowers: " << sum.funded << ", repaid: " << sum.repaid << '\n';
  out << "repayment rate among funded: " << detail::fmt(sum.repayment_rate, 4)
      << " (population base rate " << detail::fmt(sum.base_rate, 4) << ")\n";
  out << "cumulative deficit: " << detail::fmt(sum.cumulative_deficit) << '\n';
  out << "cumulative utility: " << detail::fmt_row(sum.cumulative_utility) << '\n';
  out << "minimum realized utility in any round: " << detail::fmt(sum.min_realized_utility) << '\n';
  out << "terminal weights: " << detail::fmt_row(sum.terminal_weights, 4) << '\n';
  out << "wrote ledger.ndjson, summary.csv, weights.csv" << (sweep.empty() ? "" : ", alpha_sweep.csv") << " to "
      << opts.out_dir << '\n';
  return kExitOk;
}

/// Budescu weights implied by a ledger file.
inline int cmd_weights(const std::string& ledger_path, std::size_t window, std::ostream& out) {
  std::ifstream in(ledger_path);
  if (!in) throw Error(ErrorCode::Validation, "cannot open ledger '" + ledger_path + "'");
  const auto records = read_ledger(in);
  if (records.empty()) throw Error(ErrorCode::Validation, "ledger '" + ledger_path + "' has no records");
  const std::size_t n = records.front().weights.size();
  const RoundHistory h = history_from(records, n, window);
  out << "rounds: " << records.size() << ", funded borrowers with outcomes: " << h.entries.size() << '\n';
  if (!h.empty()) {
    out << "quality Q: " << detail::fmt(budescu_quality(h)) << '\n';
    out << "contributions: " << detail::fmt_row(budescu_contributions(h)) << '\n';
  }
  const WeightVector w = budescu_weights_or_equal(h);
  out << "weights: " << detail::fmt_row(w.values()) << '\n';
  return kExitOk;
}

}  // namespace loanelicit
