// Command-line front end: match, nested, balance, outcome, min-caliper.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tripmatch/cli/run.hpp"
#include "tripmatch/diagnostics.hpp"
#include "tripmatch/propensity.hpp"
#include "tripmatch/tripartite.hpp"

namespace {

using namespace tripmatch;
using namespace tripmatch::cli;

struct CommonFlags {
  std::string config;
  std::optional<std::string> input;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* opt = cmd->add_option("--config", f.config, "run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--input", f.input, "input CSV (overrides [data] input)");
  cmd->add_option("--out-dir", f.out_dir, "output directory (overrides [output] dir)");
  cmd->add_option("--seed", f.seed, "random seed (overrides [design] seed)");
  cmd->add_option("--precision", f.precision, "cost precision digits, 0..9")
      ->check(CLI::Range(0, 9));
}

RunConfig load(const CommonFlags& f) {
  RunConfig c = load_run_config_file(f.config);
  if (f.input) c.input = *f.input;
  if (f.out_dir) c.out_dir = *f.out_dir;
  if (f.seed) c.seed = *f.seed;
  if (f.precision) c.precision = *f.precision;
  validate(c);
  return c;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const FitError& e) {
    std::cerr << "propensity model: " << e.what() << '\n';
    return kExitData;
  } catch (const SingularCovarianceError& e) {
    std::cerr << "distance: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal bipartite and tripartite matching for observational studies"};
  app.require_subcommand(1);

  CommonFlags match_flags, nested_flags, balance_flags, outcome_flags, caliper_flags;
  auto* match = app.add_subcommand("match", "run the configured design");
  add_common(match, match_flags);

  auto* nested = app.add_subcommand("nested", "run the nested M1..Mk designs");
  add_common(nested, nested_flags);

  std::optional<std::string> balance_matched;
  auto* balance = app.add_subcommand("balance", "covariate balance table");
  add_common(balance, balance_flags);
  balance->add_option("--matched", balance_matched, "matched dataset with a matched_set column");

  std::optional<std::string> outcome_matched;
  std::vector<long long> counts;
  auto* outcome = app.add_subcommand("outcome", "2x2 outcome summary with odds ratio");
  add_common(outcome, outcome_flags, false);
  outcome->add_option("--matched", outcome_matched, "matched dataset with a matched_set column");
  outcome->add_option("--counts", counts, "a b c d: group 1 yes/no, group 2 yes/no")
      ->expected(4);

  std::optional<std::string> score_column;
  auto* caliper = app.add_subcommand("min-caliper", "smallest feasible propensity caliper");
  add_common(caliper, caliper_flags);
  caliper->add_option("--score-column", score_column,
                      "use this column as the score instead of fitting a model");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (match->parsed()) {
    return guarded([&] {
      RunConfig c = load(match_flags);
      if (c.mode == DesignMode::nested) {
        throw ConfigError("mode 'nested' runs through the nested subcommand");
      }
      return run(c, std::cout);
    });
  }
  if (nested->parsed()) {
    return guarded([&] {
      RunConfig c = load(nested_flags);
      if (c.mode != DesignMode::nested) {
        throw ConfigError("the nested subcommand needs mode = \"nested\"");
      }
      return run(c, std::cout);
    });
  }
  if (balance->parsed()) {
    return guarded([&] {
      std::optional<std::filesystem::path> m;
      if (balance_matched) m = *balance_matched;
      return run_balance(load(balance_flags), m, std::cout);
    });
  }
  if (outcome->parsed()) {
    return guarded([&] {
      if (!counts.empty()) {
        const OutcomeSummary s = outcome_2x2_counts(counts[0], counts[1], counts[2], counts[3]);
        std::cout << "odds_ratio " << format_double(s.odds_ratio) << '\n'
                  << "ci_low " << format_double(s.ci_low) << '\n'
                  << "ci_high " << format_double(s.ci_high) << '\n';
        if (s.continuity_corrected) std::cout << "0.5 added to each cell\n";
        std::cout << kOutcomeIntervalNote << '\n';
        return kExitOk;
      }
      if (outcome_flags.config.empty()) throw ConfigError("outcome needs --config or --counts");
      std::optional<std::filesystem::path> m;
      if (outcome_matched) m = *outcome_matched;
      return run_outcome(load(outcome_flags), m, std::cout);
    });
  }
  return guarded([&] {
    const CaliperSearch s = run_min_caliper(load(caliper_flags), score_column);
    std::cout << "caliper " << format_double(s.caliper) << '\n'
              << "certificate_size " << s.certificate_size << '\n';
    return kExitOk;
  });
}
