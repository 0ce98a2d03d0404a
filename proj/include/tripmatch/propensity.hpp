#ifndef TRIPMATCH_PROPENSITY_HPP_
#define TRIPMATCH_PROPENSITY_HPP_

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tripmatch/design_matrix.hpp"
#include "tripmatch/sample_table.hpp"

namespace tripmatch {

// Raised when a logistic fit has no finite maximum or no unique solution.
// column() names the offending design column (e.g. "bmi=>30").
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::string column)
      : std::runtime_error(what), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class SeparationError : public FitError {
 public:
  using FitError::FitError;
};

class RankDeficiencyError : public FitError {
 public:
  using FitError::FitError;
};

class PropensityModel {
 public:
  PropensityModel(DesignSpec design, Eigen::VectorXd coefficients)
      : design_(std::move(design)), coefficients_(std::move(coefficients)) {}

  // coefficients()[0] is the intercept, then one weight per design column.
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const DesignSpec& design() const { return design_; }

  // Fitted probabilities, always strictly inside (0, 1).
  std::vector<double> scores(const SampleTable& table,
                             std::span<const std::size_t> rows) const;
  std::vector<double> scores(const SampleTable& table) const;

  int iterations = 0;
  double gradient_norm = 0.0;

 private:
  DesignSpec design_;
  Eigen::VectorXd coefficients_;
};

inline constexpr double kPropensityGradientTolerance = 1e-8;
inline constexpr int kPropensityMaxIterations = 50;

// Logistic regression of `z` (one 0/1 label per entry of `rows`; repeated
// rows allowed) on the expanded covariates, by Newton/IRLS with step halving.
PropensityModel estimate_propensity(const SampleTable& table,
                                    std::span<const std::size_t> rows,
                                    std::span<const int> z,
                                    std::span<const std::string> covariates);

// Same, on every row of the table with the table's group flag as label.
PropensityModel estimate_propensity(const SampleTable& table,
                                    std::span<const std::string> covariates);

}  // namespace tripmatch

#endif  // TRIPMATCH_PROPENSITY_HPP_
