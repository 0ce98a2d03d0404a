#ifndef TRIPMATCH_DIAGNOSTICS_HPP_
#define TRIPMATCH_DIAGNOSTICS_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tripmatch/bipartite.hpp"
#include "tripmatch/sample_table.hpp"

namespace tripmatch {

// Returned when the pooled variance is zero but the two groups differ.
inline constexpr double kInfiniteSmd = std::numeric_limits<double>::infinity();

// |p_a - p_b| / sqrt((p_a(1-p_a) + p_b(1-p_b)) / 2).
double smd_binary(double p_a, double p_b);

// |mean_a - mean_b| / sqrt((var_a + var_b) / 2).
double smd_numeric(double mean_a, double var_a, double mean_b, double var_b);

// Summary of one covariate level (or numeric covariate) in one group.
struct BalanceCell {
  // Units carrying the level; group size for numeric rows.
  std::size_t count = 0;
  // Proportion for a level, mean for a numeric covariate.
  double value = 0.0;
  // Sample variance (n - 1 denominator) for numeric rows, p(1-p) for levels.
  double variance = 0.0;
  // Against the first block (the treated group).
  double smd = 0.0;
};

struct BalanceRow {
  std::string covariate;
  // Level label, or "numeric".
  std::string level;
  bool numeric = false;
  std::vector<BalanceCell> cells;

  // SMD between any two blocks of this row.
  double smd_between(std::size_t a, std::size_t b) const;
};

struct BalanceTable {
  // "treated", "controls", then "M1", "M2", ...
  std::vector<std::string> blocks;
  std::vector<std::size_t> block_sizes;
  std::vector<BalanceRow> rows;

  double max_smd(std::size_t block) const;
};

// Treated group, full control population, and the matched controls of each
// result (which must be row-indexed and feasible).
BalanceTable check_balance(const SampleTable& data, std::span<const MatchResult> results,
                           std::span<const std::string> covariates);

// Balance of arbitrary row groups; blocks[0] is the reference for `smd`.
BalanceTable balance_of_groups(const SampleTable& data,
                               const std::vector<std::vector<std::size_t>>& groups,
                               std::vector<std::string> names,
                               std::span<const std::string> covariates);

struct OverlapHistogram {
  // bins + 1 equal-width edges over [0, 1].
  std::vector<double> edges;
  std::vector<double> density_a;
  std::vector<double> density_b;
};

OverlapHistogram propensity_overlap(std::span<const double> scores_a,
                                    std::span<const double> scores_b, std::size_t bins);

struct OutcomeSummary {
  // a, b: group 1 with/without the outcome; c, d: group 2.
  long long a = 0, b = 0, c = 0, d = 0;
  double rate_1 = 0.0;
  double rate_2 = 0.0;
  double odds_ratio = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  // 0.5 added to every cell because one of them was zero.
  bool continuity_corrected = false;
  // Units skipped for lack of an outcome value.
  std::size_t excluded = 0;
};

inline constexpr const char* kOutcomeIntervalNote =
    "Wald 95% interval on the log odds ratio; pairing is ignored";

// OR = (a/b)/(c/d) with a Wald 95% interval.
OutcomeSummary outcome_2x2_counts(long long a, long long b, long long c, long long d);

// Outcomes coded 0/1.
OutcomeSummary outcome_2x2(std::span<const int> group_1, std::span<const int> group_2);

// Treated units of `result` against their matched controls.
OutcomeSummary outcome_for_match(const SampleTable& data, const MatchResult& result);

}  // namespace tripmatch

#endif  // TRIPMATCH_DIAGNOSTICS_HPP_
