#ifndef TRIPMATCH_DISTANCES_HPP_
#define TRIPMATCH_DISTANCES_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripmatch/sample_table.hpp"

namespace tripmatch {

// Sparse left-by-right distance list. Left nodes are numbered
// 1..n_left and right nodes n_left+1..n_left+n_right.
// Edges are ordered by (start_n, end_n).
struct DistanceList {
  std::size_t n_left = 0;
  std::size_t n_right = 0;
  std::vector<int> start_n;
  std::vector<int> end_n;
  std::vector<double> d;
  // Left nodes (1-based) that ended up without any edge.
  std::vector<int> isolated_left;

  std::size_t size() const { return d.size(); }
  bool feasible_by_construction() const { return isolated_left.empty(); }

  // 0-based endpoints of edge e.
  std::size_t left_of(std::size_t e) const { return static_cast<std::size_t>(start_n[e] - 1); }
  std::size_t right_of(std::size_t e) const {
    return static_cast<std::size_t>(end_n[e]) - n_left - 1;
  }

  // Appends an edge between 0-based left/right indices. Callers keep the
  // (start_n, end_n) ordering; finalize() recomputes isolated_left.
  void add(std::size_t left, std::size_t right, double distance);
  void finalize();
};

// Complete list over a dense left-by-right matrix.
DistanceList dense_list(const Eigen::MatrixXd& distances);

// Swaps the roles of left and right nodes.
DistanceList transpose(const DistanceList& list);

// Right nodes (0-based) that have no edge.
std::vector<std::size_t> isolated_right(const DistanceList& list);

class SingularCovarianceError : public std::runtime_error {
 public:
  SingularCovarianceError(const std::string& what, std::vector<std::string> columns)
      : std::runtime_error(what), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
};

// Dense Mahalanobis distances between `left_rows` and `right_rows` on the
// expanded covariates, with the covariance pooled over both row sets.
// robust=true works on per-column average ranks rescaled to unit variance.
Eigen::MatrixXd mahalanobis(const SampleTable& table, std::span<const std::size_t> left_rows,
                            std::span<const std::size_t> right_rows,
                            std::span<const std::string> covariates, bool robust);

// Treated-by-control convenience form.
Eigen::MatrixXd mahalanobis(const SampleTable& table, std::span<const std::string> covariates,
                            bool robust);

enum class DistanceMethod { mahalanobis, robust_mahalanobis, propensity_l1 };

struct ListOptions {
  DistanceMethod method = DistanceMethod::robust_mahalanobis;
  // Edge (i, j) kept iff p_i - p_j lies in [-caliper_low, +caliper_high].
  // No caliper when caliper_low is empty; caliper_high defaults to it.
  std::optional<double> caliper_low;
  std::optional<double> caliper_high;
  // Keep only the k right nodes closest in |p_i - p_j| (ties by index).
  std::optional<std::size_t> k;
};

bool needs_scores(const ListOptions& options);

// General form: explicit left/right row sets with one score per row entry.
// Scores may be empty when options need none.
DistanceList create_list_from_scratch(const SampleTable& table,
                                      std::span<const std::size_t> left_rows,
                                      std::span<const std::size_t> right_rows,
                                      std::span<const std::string> covariates,
                                      std::span<const double> left_scores,
                                      std::span<const double> right_scores,
                                      const ListOptions& options);

// Treated (left) vs control (right) with one score per table row.
DistanceList create_list_from_scratch(const SampleTable& table,
                                      std::span<const std::string> covariates,
                                      std::span<const double> scores,
                                      const ListOptions& options);

struct CaliperSearch {
  double caliper = 0.0;
  // Size of the perfect matching found at `caliper` (== n_treated) and the
  // matching itself: control index per treated unit.
  int certificate_size = 0;
  std::vector<int> certificate;
};

// Smallest c such that every treated unit can be paired with a distinct
// control with |p_t - p_c| <= c. Requires n_control >= n_treated >= 1.
CaliperSearch min_feasible_caliper(std::span<const double> p_treated,
                                   std::span<const double> p_control);

}  // namespace tripmatch

#endif  // TRIPMATCH_DISTANCES_HPP_
