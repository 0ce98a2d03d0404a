#ifndef TRIPMATCH_DESIGN_MATRIX_HPP_
#define TRIPMATCH_DESIGN_MATRIX_HPP_

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripmatch/sample_table.hpp"

namespace tripmatch {

struct DesignColumn {
  std::string covariate;
  // Empty for numeric covariates; otherwise the level this 0/1 dummy marks.
  std::string level;

  std::string label() const { return level.empty() ? covariate : covariate + "=" + level; }
};

// Covariate-to-column expansion. Categorical covariates become 0/1 dummies
// for every level present in the fitting rows except the reference, which is
// the most frequent level (lowest level code on ties).
class DesignSpec {
 public:
  static DesignSpec fit(const SampleTable& table, std::span<const std::size_t> rows,
                        std::span<const std::string> covariates);

  const std::vector<DesignColumn>& columns() const { return columns_; }
  std::size_t width() const { return columns_.size(); }

  // One design row per entry of `rows` (repeats allowed). No intercept.
  Eigen::MatrixXd expand(const SampleTable& table,
                         std::span<const std::size_t> rows) const;

 private:
  std::vector<DesignColumn> columns_;
};

}  // namespace tripmatch

#endif  // TRIPMATCH_DESIGN_MATRIX_HPP_
