#ifndef TRIPMATCH_CLI_RUN_HPP_
#define TRIPMATCH_CLI_RUN_HPP_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "tripmatch/bipartite.hpp"
#include "tripmatch/cli/config.hpp"
#include "tripmatch/cli/csv.hpp"
#include "tripmatch/distances.hpp"
#include "tripmatch/sample_table.hpp"

namespace tripmatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitInternal = 4;

struct Dataset {
  CsvTable csv;
  SampleTable table;
};

// Typed view of the input. Empty categorical cells become the Missing level;
// empty or non-numeric cells in numeric columns, unknown columns and group
// values other than the configured two raise DataError with the location.
Dataset ingest_csv(const std::filesystem::path& path, const RunConfig& config);
Dataset ingest_csv(const CsvTable& csv, const RunConfig& config);

// Template units: every declared covariate present in the file, which must
// include the `generalize` covariates. No group column is needed.
SampleTable ingest_template(const std::filesystem::path& path, const RunConfig& config);

// Rebuilds a row-indexed result from a matched dataset's matched_set and
// distance columns. Rows must line up with `data`.
MatchResult read_matched_sets(const CsvTable& matched, const SampleTable& data);

// Runs the configured design and writes matched datasets, the balance
// table, the outcome summary (when an outcome column is configured) and
// manifest.json into config.out_dir. Returns kExitOk or kExitInfeasible;
// other failures are thrown.
int run(const RunConfig& config, std::ostream& log);

// Balance table for the input alone, or against a matched dataset.
int run_balance(const RunConfig& config, const std::optional<std::filesystem::path>& matched,
                std::ostream& log);

// Outcome summary for the input alone, or against a matched dataset.
int run_outcome(const RunConfig& config, const std::optional<std::filesystem::path>& matched,
                std::ostream& log);

// Minimum feasible caliper on propensity scores, either read from
// `score_column` or fitted on the match_on covariates.
CaliperSearch run_min_caliper(const RunConfig& config,
                              const std::optional<std::string>& score_column);

}  // namespace tripmatch::cli

#endif  // TRIPMATCH_CLI_RUN_HPP_
