#include "tripmatch/sample_table.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace tripmatch {

bool SampleTable::has_covariate(std::string_view name) const {
  return std::any_of(covariates_.begin(), covariates_.end(),
                     [&](const Covariate& c) { return c.name == name; });
}

const Covariate& SampleTable::covariate(std::string_view name) const {
  for (const Covariate& c : covariates_) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("unknown covariate '" + std::string(name) + "'");
}

std::vector<std::size_t> SampleTable::rows_with_group(int z) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < group_.size(); ++i) {
    if (group_[i] == z) rows.push_back(i);
  }
  return rows;
}

void SampleTable::add_row(std::string id, int group, std::optional<int> outcome) {
  if (!covariates_.empty()) {
    throw std::logic_error("rows must be added before covariate columns");
  }
  if (group != 0 && group != 1) {
    throw std::invalid_argument("group flag must be 0 or 1 for unit '" + id + "'");
  }
  if (outcome && *outcome != 0 && *outcome != 1) {
    throw std::invalid_argument("outcome must be binary for unit '" + id + "'");
  }
  if (!id_index_.insert(id).second) {
    throw std::invalid_argument("duplicate unit id '" + id + "'");
  }
  ids_.push_back(std::move(id));
  group_.push_back(group);
  outcome_.push_back(outcome);
}

void SampleTable::add_numeric(std::string name, std::vector<double> values) {
  if (has_covariate(name)) {
    throw std::invalid_argument("duplicate covariate '" + name + "'");
  }
  if (values.size() != row_count()) {
    throw std::invalid_argument("covariate '" + name + "' has " +
                                std::to_string(values.size()) +
                                " values for " + std::to_string(row_count()) +
                                " rows");
  }
  Covariate c;
  c.name = std::move(name);
  c.kind = CovariateKind::numeric;
  c.numeric = std::move(values);
  covariates_.push_back(std::move(c));
}

void SampleTable::add_categorical(std::string name,
                                  std::span<const std::string> values) {
  if (has_covariate(name)) {
    throw std::invalid_argument("duplicate covariate '" + name + "'");
  }
  if (values.size() != row_count()) {
    throw std::invalid_argument("covariate '" + name + "' has " +
                                std::to_string(values.size()) +
                                " values for " + std::to_string(row_count()) +
                                " rows");
  }
  Covariate c;
  c.name = std::move(name);
  c.kind = CovariateKind::categorical;
  std::unordered_map<std::string, int> index;
  c.codes.reserve(values.size());
  for (const std::string& raw : values) {
    const std::string level = raw.empty() ? std::string(kMissingLevel) : raw;
    auto [it, inserted] = index.emplace(level, static_cast<int>(c.levels.size()));
    if (inserted) c.levels.push_back(level);
    c.codes.push_back(it->second);
  }
  covariates_.push_back(std::move(c));
}

void SampleTable::append(const SampleTable& other) {
  if (other.covariates_.size() != covariates_.size()) {
    throw std::invalid_argument("appended table declares a different covariate set");
  }
  for (const std::string& id : other.ids_) {
    if (id_index_.contains(id)) {
      throw std::invalid_argument("duplicate unit id '" + id + "' in appended table");
    }
  }
  for (Covariate& mine : covariates_) {
    const Covariate& theirs = other.covariate(mine.name);
    if (theirs.kind != mine.kind) {
      throw std::invalid_argument("covariate '" + mine.name +
                                  "' changes kind in appended table");
    }
    if (mine.kind == CovariateKind::numeric) {
      mine.numeric.insert(mine.numeric.end(), theirs.numeric.begin(),
                          theirs.numeric.end());
      continue;
    }
    std::vector<int> remap(theirs.levels.size());
    for (std::size_t l = 0; l < theirs.levels.size(); ++l) {
      auto it = std::find(mine.levels.begin(), mine.levels.end(), theirs.levels[l]);
      if (it == mine.levels.end()) {
        mine.levels.push_back(theirs.levels[l]);
        remap[l] = static_cast<int>(mine.levels.size() - 1);
      } else {
        remap[l] = static_cast<int>(it - mine.levels.begin());
      }
    }
    for (int code : theirs.codes) mine.codes.push_back(remap[static_cast<std::size_t>(code)]);
  }
  ids_.insert(ids_.end(), other.ids_.begin(), other.ids_.end());
  id_index_.insert(other.ids_.begin(), other.ids_.end());
  group_.insert(group_.end(), other.group_.begin(), other.group_.end());
  outcome_.insert(outcome_.end(), other.outcome_.begin(), other.outcome_.end());
}

}  // namespace tripmatch
