#include "tripmatch/design_matrix.hpp"

#include <algorithm>

namespace tripmatch {

DesignSpec DesignSpec::fit(const SampleTable& table, std::span<const std::size_t> rows,
                           std::span<const std::string> covariates) {
  DesignSpec spec;
  for (const std::string& name : covariates) {
    const Covariate& cov = table.covariate(name);
    if (cov.kind == CovariateKind::numeric) {
      spec.columns_.push_back({cov.name, ""});
      continue;
    }
    std::vector<std::size_t> counts(cov.levels.size(), 0);
    for (std::size_t r : rows) ++counts[static_cast<std::size_t>(cov.codes[r])];
    const auto reference = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    for (std::size_t l = 0; l < cov.levels.size(); ++l) {
      if (l == reference || counts[l] == 0) continue;
      spec.columns_.push_back({cov.name, cov.levels[l]});
    }
  }
  return spec;
}

Eigen::MatrixXd DesignSpec::expand(const SampleTable& table,
                                   std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(columns_.size()));
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const Covariate& cov = table.covariate(columns_[c].covariate);
    const auto col = static_cast<Eigen::Index>(c);
    if (cov.kind == CovariateKind::numeric) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        x(static_cast<Eigen::Index>(i), col) = cov.numeric[rows[i]];
      }
      continue;
    }
    const auto it = std::find(cov.levels.begin(), cov.levels.end(), columns_[c].level);
    const int code = it == cov.levels.end() ? -1 : static_cast<int>(it - cov.levels.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x(static_cast<Eigen::Index>(i), col) = cov.codes[rows[i]] == code ? 1.0 : 0.0;
    }
  }
  return x;
}

}  // namespace tripmatch
