#ifndef TRIPMATCH_SAMPLE_TABLE_HPP_
#define TRIPMATCH_SAMPLE_TABLE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace tripmatch {

inline constexpr std::string_view kMissingLevel = "Missing";

enum class CovariateKind { numeric, categorical };

// One covariate column. Numeric columns hold doubles; categorical columns
// hold level codes into `levels`, where "Missing" is an ordinary level.
struct Covariate {
  std::string name;
  CovariateKind kind = CovariateKind::numeric;
  std::vector<double> numeric;
  std::vector<int> codes;
  std::vector<std::string> levels;

  std::size_t size() const {
    return kind == CovariateKind::numeric ? numeric.size() : codes.size();
  }
  const std::string& level_of(std::size_t row) const {
    return levels[static_cast<std::size_t>(codes[row])];
  }
};

// Unit records: id, group flag (1 treated, 0 control), covariates and an
// optional binary outcome.
class SampleTable {
 public:
  SampleTable() = default;

  std::size_t row_count() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<int>& group() const { return group_; }
  const std::vector<std::optional<int>>& outcome() const { return outcome_; }
  const std::vector<Covariate>& covariates() const { return covariates_; }

  bool has_covariate(std::string_view name) const;
  // Throws std::out_of_range naming the covariate when absent.
  const Covariate& covariate(std::string_view name) const;

  std::vector<std::size_t> treated_rows() const { return rows_with_group(1); }
  std::vector<std::size_t> control_rows() const { return rows_with_group(0); }
  std::vector<std::size_t> rows_with_group(int z) const;

  // Builders. Rows are added first, then covariate columns of matching
  // length; every mutation re-checks the table invariants.
  void add_row(std::string id, int group, std::optional<int> outcome = std::nullopt);
  void add_numeric(std::string name, std::vector<double> values);
  // Empty strings become the Missing level. Levels are kept in first-seen
  // order.
  void add_categorical(std::string name, std::span<const std::string> values);

  // Appends the rows of `other`; covariate sets must agree by name and
  // kind. Categorical levels are merged.
  void append(const SampleTable& other);

 private:
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_index_;
  std::vector<int> group_;
  std::vector<std::optional<int>> outcome_;
  std::vector<Covariate> covariates_;
};

}  // namespace tripmatch

#endif  // TRIPMATCH_SAMPLE_TABLE_HPP_
