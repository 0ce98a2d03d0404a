#ifndef TRIPMATCH_DESIGNS_HPP_
#define TRIPMATCH_DESIGNS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tripmatch/bipartite.hpp"
#include "tripmatch/distances.hpp"
#include "tripmatch/sample_table.hpp"
#include "tripmatch/tripartite.hpp"

namespace tripmatch {

// Result of one matched design, indexed by table rows.
struct DesignResult {
  // (treated row, selected control row, within-pair distance).
  MatchResult match;
  // Present whenever a tripartite network was solved.
  std::optional<TripartiteMatch> network;
  // Rows of the random reference sample W' (disparity designs only).
  std::vector<std::size_t> reference_sample;
  // "left", "right" or "joint" when infeasible.
  std::string failing_side;
  // Set when the design fell back to a simpler form.
  std::string note;
};

struct DisparityOptions {
  double lambda = 10.0;
  std::uint64_t seed = 0;
  ListOptions left{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  ListOptions right{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  int precision_digits = kDefaultPrecisionDigits;
};

// Selects |B| controls (group 0) that resemble the treated group (group 1)
// on `x` while resembling a random sample W' of the controls on `x_tilde`.
// With an empty `x_tilde` and lambda = 0 this is an optimal pair match on
// `x`; with lambda > 0 the right side instead balances the propensity score
// on `x` against the treated group (see balanced_pair_match), falling back
// to the pair match with a note when that propensity fit fails.
DesignResult disparity_match(const SampleTable& data, std::span<const std::string> x,
                             std::span<const std::string> x_tilde,
                             const DisparityOptions& options);

// Design i matches on partitions 1..i and preserves partitions i+1..k. All
// designs share the same reference sample.
std::vector<DesignResult> nested_designs(const SampleTable& data,
                                         const std::vector<std::vector<std::string>>& partitions,
                                         const DisparityOptions& options);

struct BalancedPairOptions {
  double lambda = 10.0;
  // Close pairing on the pair covariates.
  ListOptions left{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  // Balance side; propensity scores come from the balance covariates.
  ListOptions right{DistanceMethod::propensity_l1, {}, {}, {}};
  int precision_digits = kDefaultPrecisionDigits;
};

// Treated units appear on both outer layers with the controls in between;
// pairs are read off the left side.
DesignResult balanced_pair_match(const SampleTable& data,
                                 std::span<const std::string> pair_covariates,
                                 std::span<const std::string> balance_covariates,
                                 const BalancedPairOptions& options);

struct TemplateOptions {
  // Weight on the treated-control pairing side, large so that pair quality
  // comes before resemblance to the template.
  double lambda = 100.0;
  ListOptions left{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  ListOptions right{DistanceMethod::robust_mahalanobis, {}, {}, {}};
  int precision_digits = kDefaultPrecisionDigits;
};

// Picks |template| treated units resembling the template on `generalize`
// covariates and pairs each with a control on `pair_covariates`.
DesignResult template_match(const SampleTable& data, const SampleTable& template_units,
                            std::span<const std::string> generalize_covariates,
                            std::span<const std::string> pair_covariates,
                            const TemplateOptions& options);

}  // namespace tripmatch

#endif  // TRIPMATCH_DESIGNS_HPP_
