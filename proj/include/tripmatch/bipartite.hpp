#ifndef TRIPMATCH_BIPARTITE_HPP_
#define TRIPMATCH_BIPARTITE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tripmatch/distances.hpp"
#include "tripmatch/netflow.hpp"
#include "tripmatch/sample_table.hpp"

namespace tripmatch {

struct MatchedPair {
  std::size_t treated = 0;
  std::size_t control = 0;
  double distance = 0.0;
};

// Outcome of a matching run. Indices refer to whatever the producer matched
// over: list node indices for match_optimal/match_greedy, table rows for the
// design-level entry points (see to_rows).
struct MatchResult {
  bool feasible = false;
  // Ordered by (treated, control). Empty when infeasible.
  std::vector<MatchedPair> pairs;
  // Human-readable reason when infeasible.
  std::string failure;

  double total_distance() const;
};

// Penalized balance on one nominal covariate: matched controls should carry
// each category `controls` times as often as the treated units do.
struct NearFineBalance {
  std::vector<int> left_category;
  std::vector<int> right_category;
  // Cost per unit of excess in a category, in distance units. Empty picks a
  // penalty large enough that balance always dominates total distance.
  std::optional<double> penalty;
};

struct BipartiteOptions {
  std::size_t controls = 1;
  std::optional<NearFineBalance> near_fine_balance;
  int precision_digits = kDefaultPrecisionDigits;
};

// Minimum total distance 1-to-`controls` matching over the list's edges,
// solved as a min-cost flow.
MatchResult match_optimal(const DistanceList& list, const BipartiteOptions& options = {});

// Repeatedly takes the globally smallest remaining edge (ties by distance,
// then left, then right index). Pair matching only.
MatchResult match_greedy(const DistanceList& list);

// Sum over categories of |controls * treated count - matched control count|.
std::size_t category_deviation(const MatchResult& result, std::span<const int> left_category,
                               std::span<const int> right_category, std::size_t controls = 1);

// Re-indexes a list-level result onto table rows.
MatchResult to_rows(const MatchResult& result, std::span<const std::size_t> left_rows,
                    std::span<const std::size_t> right_rows);

// Matched-set label per table row: 1..n for sets ordered by treated row,
// empty for unmatched rows.
std::vector<std::optional<int>> matched_set_labels(const MatchResult& result,
                                                   std::size_t row_count);

// Within-pair distance per table row; set on matched controls only.
std::vector<std::optional<double>> matched_distances(const MatchResult& result,
                                                     std::size_t row_count);

struct ReportRow {
  std::size_t row = 0;
  int matched_set = 0;
  bool treated = false;
  std::optional<double> distance;
};

// Matched units grouped by matched set in ascending label order, treated
// unit first, then its controls by row. `result` must be row-indexed.
std::vector<ReportRow> summarize_match(const MatchResult& result, const SampleTable& data);

}  // namespace tripmatch

#endif  // TRIPMATCH_BIPARTITE_HPP_
