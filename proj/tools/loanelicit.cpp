// loanelicit: curves, single-round settlement, incentive audits and multi-round
// campaigns driven by .scenario files.

#include <iostream>

#include "CLI11.hpp"
#include "loanelicit/commands.hpp"

using namespace loanelicit;

namespace {

std::optional<MechanismKind> parse_mechanism(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "winkler") return MechanismKind::Winkler;
  if (s == "vcg") return MechanismKind::Vcg;
  throw Error(ErrorCode::InvalidArgument, "unknown mechanism '" + s + "' (expected winkler or vcg)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elicitation mechanisms for loan recommendations"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  std::size_t rounds = 0;
  std::string mechanism;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--workers", opts.workers, "Worker threads for Monte Carlo estimates")->check(CLI::PositiveNumber);
    sub->add_option("--mechanism", mechanism, "Override the scenario mechanism (winkler or vcg)");
  };

  std::string scenario_path;

  auto* curves = app.add_subcommand("curves", "Write truthful-utility curves as CSV");
  std::vector<std::string> variants;
  double curve_c = 0.5;
  std::size_t grid = 101;
  curves->add_option("scenario", scenario_path, "Scenario with a curves block");
  curves->add_option("--variant", variants, "trunc-winkler-log, trunc-quadratic or trunc-quadratic-plain");
  curves->add_option("-c,--threshold", curve_c, "Score threshold in (0,1)");
  curves->add_option("--grid", grid, "Number of belief grid points")->check(CLI::Range(2, 1000000));
  curves->add_option("--out", opts.out_dir, "Output directory");

  auto* run = app.add_subcommand("run", "Allocate and settle one round");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  add_common(run);

  auto* audit = app.add_subcommand("audit", "Audit one desideratum");
  std::string desideratum;
  audit->add_option("scenario", scenario_path, "Scenario file")->required();
  audit->add_option("--desideratum,-d", desideratum,
                    "alloc-eff, weak-epic, strict-epic, strict-iic, ex-post-ir, strong-ex-post-ir, "
                    "weight-monotonicity or no-veto")
      ->required();
  audit->add_option("--samples", samples, "Monte Carlo samples per comparison");
  add_common(audit);

  auto* camp = app.add_subcommand("campaign", "Simulate repeated rounds and write a ledger");
  camp->add_option("scenario", scenario_path, "Scenario with a world block")->required();
  camp->add_option("--rounds", rounds, "Override the number of rounds");
  camp->add_option("--alpha-sweep", opts.alpha_sweep, "Payment scales to compare");
  camp->add_option("--out", opts.out_dir, "Output directory");
  add_common(camp);

  auto* weights = app.add_subcommand("weights", "Budescu weights from a ledger");
  std::string ledger;
  std::size_t window = 0;
  weights->add_option("ledger", ledger, "ledger.ndjson written by campaign")->required();
  weights->add_option("--window", window, "Only use the last N rounds (0 for all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->count("--seed") || audit->count("--seed") || camp->count("--seed")) opts.seed = seed;
    if (audit->count("--samples")) opts.samples = samples;
    if (camp->count("--rounds")) opts.rounds = rounds;
    opts.mechanism = parse_mechanism(mechanism);

    if (curves->parsed()) {
      CurveSpec spec;
      if (!scenario_path.empty()) {
        const Scenario s = load_scenario(scenario_path);
        if (!s.curves) throw Error(ErrorCode::Validation, scenario_path + ": no curves block");
        spec = *s.curves;
      }
      if (!variants.empty()) {
        spec.variants.clear();
        for (const auto& v : variants) {
          auto parsed = parse_variant(v);
          if (!parsed) throw Error(ErrorCode::InvalidArgument, "unknown variant '" + v + "'");
          spec.variants.push_back(*parsed);
        }
      }
      if (curves->count("--threshold")) spec.threshold = curve_c;
      if (curves->count("--grid")) spec.grid = grid;
      if (spec.variants.empty()) throw Error(ErrorCode::InvalidArgument, "give a scenario or at least one --variant");
      if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) throw Error(ErrorCode::InvalidArgument, "threshold must lie in (0,1)");
      return cmd_curves(spec, opts, std::cout);
    }
    if (weights->parsed()) return cmd_weights(ledger, window, std::cout);

    const Scenario s = load_scenario(scenario_path);
    if (run->parsed()) return cmd_run(s, opts, std::cout);
    if (audit->parsed()) return cmd_audit(s, desideratum, opts, std::cout);
    if (camp->parsed()) return cmd_campaign(s, opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
