#include "tripmatch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tripmatch {

namespace {

double smd_from_variance(double diff, double var_a, double var_b) {
  const double pooled = (var_a + var_b) / 2.0;
  if (!(pooled > 0.0)) return diff == 0.0 ? 0.0 : kInfiniteSmd;
  return std::abs(diff) / std::sqrt(pooled);
}

BalanceCell numeric_cell(const Covariate& cov, std::span<const std::size_t> rows) {
  BalanceCell cell;
  cell.count = rows.size();
  if (rows.empty()) return cell;
  double sum = 0.0;
  for (std::size_t r : rows) sum += cov.numeric[r];
  cell.value = sum / static_cast<double>(rows.size());
  if (rows.size() > 1) {
    double ss = 0.0;
    for (std::size_t r : rows) ss += (cov.numeric[r] - cell.value) * (cov.numeric[r] - cell.value);
    cell.variance = ss / static_cast<double>(rows.size() - 1);
  }
  return cell;
}

BalanceCell level_cell(const Covariate& cov, int code, std::span<const std::size_t> rows) {
  BalanceCell cell;
  for (std::size_t r : rows) cell.count += cov.codes[r] == code ? 1 : 0;
  if (!rows.empty()) {
    cell.value = static_cast<double>(cell.count) / static_cast<double>(rows.size());
  }
  cell.variance = cell.value * (1.0 - cell.value);
  return cell;
}

}  // namespace

double smd_binary(double p_a, double p_b) {
  if (!(p_a >= 0.0 && p_a <= 1.0 && p_b >= 0.0 && p_b <= 1.0)) {
    throw std::invalid_argument("proportions must lie in [0, 1]");
  }
  return smd_from_variance(p_a - p_b, p_a * (1.0 - p_a), p_b * (1.0 - p_b));
}

double smd_numeric(double mean_a, double var_a, double mean_b, double var_b) {
  if (!std::isfinite(mean_a) || !std::isfinite(mean_b) || !(var_a >= 0.0) || !(var_b >= 0.0)) {
    throw std::invalid_argument("means must be finite and variances nonnegative");
  }
  return smd_from_variance(mean_a - mean_b, var_a, var_b);
}

double BalanceRow::smd_between(std::size_t a, std::size_t b) const {
  return smd_from_variance(cells.at(a).value - cells.at(b).value, cells[a].variance,
                           cells[b].variance);
}

double BalanceTable::max_smd(std::size_t block) const {
  double worst = 0.0;
  for (const BalanceRow& row : rows) worst = std::max(worst, row.cells.at(block).smd);
  return worst;
}

BalanceTable balance_of_groups(const SampleTable& data,
                               const std::vector<std::vector<std::size_t>>& groups,
                               std::vector<std::string> names,
                               std::span<const std::string> covariates) {
  if (groups.empty() || names.size() != groups.size()) {
    throw std::invalid_argument("one name is needed per balance group");
  }
  for (const std::string& name : covariates) {
    if (!data.has_covariate(name)) {
      throw std::invalid_argument("unknown covariate '" + name + "'");
    }
  }
  BalanceTable table;
  table.blocks = std::move(names);
  for (const auto& g : groups) table.block_sizes.push_back(g.size());

  const auto finish = [&](BalanceRow row) {
    for (std::size_t b = 0; b < row.cells.size(); ++b) row.cells[b].smd = row.smd_between(b, 0);
    table.rows.push_back(std::move(row));
  };
  for (const std::string& name : covariates) {
    const Covariate& cov = data.covariate(name);
    if (cov.kind == CovariateKind::numeric) {
      BalanceRow row{cov.name, "numeric", true, {}};
      for (const auto& g : groups) row.cells.push_back(numeric_cell(cov, g));
      finish(std::move(row));
      continue;
    }
    for (std::size_t l = 0; l < cov.levels.size(); ++l) {
      BalanceRow row{cov.name, cov.levels[l], false, {}};
      for (const auto& g : groups) row.cells.push_back(level_cell(cov, static_cast<int>(l), g));
      finish(std::move(row));
    }
  }
  return table;
}

BalanceTable check_balance(const SampleTable& data, std::span<const MatchResult> results,
                           std::span<const std::string> covariates) {
  std::vector<std::vector<std::size_t>> groups{data.treated_rows(), data.control_rows()};
  std::vector<std::string> names{"treated", "controls"};
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].feasible) {
      throw std::invalid_argument("match M" + std::to_string(i + 1) + " is infeasible");
    }
    std::set<std::size_t> matched;
    for (const MatchedPair& p : results[i].pairs) matched.insert(p.control);
    groups.emplace_back(matched.begin(), matched.end());
    names.push_back("M" + std::to_string(i + 1));
  }
  return balance_of_groups(data, groups, std::move(names), covariates);
}

OverlapHistogram propensity_overlap(std::span<const double> scores_a,
                                    std::span<const double> scores_b, std::size_t bins) {
  if (bins < 2) throw std::invalid_argument("at least two bins are required");
  OverlapHistogram out;
  for (std::size_t i = 0; i <= bins; ++i) {
    out.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  }
  const auto fill = [bins](std::span<const double> scores) {
    std::vector<double> density(bins, 0.0);
    for (double s : scores) {
      const double clamped = std::clamp(s, 0.0, 1.0);
      const auto bin = std::min(bins - 1, static_cast<std::size_t>(clamped * static_cast<double>(bins)));
      density[bin] += 1.0;
    }
    if (!scores.empty()) {
      for (double& v : density) v /= static_cast<double>(scores.size());
    }
    return density;
  };
  out.density_a = fill(scores_a);
  out.density_b = fill(scores_b);
  return out;
}

OutcomeSummary outcome_2x2_counts(long long a, long long b, long long c, long long d) {
  if (a < 0 || b < 0 || c < 0 || d < 0) throw std::invalid_argument("counts must be nonnegative");
  if (a + b == 0 || c + d == 0) throw std::invalid_argument("both groups need at least one unit");
  OutcomeSummary out;
  out.a = a;
  out.b = b;
  out.c = c;
  out.d = d;
  out.rate_1 = static_cast<double>(a) / static_cast<double>(a + b);
  out.rate_2 = static_cast<double>(c) / static_cast<double>(c + d);
  double fa = static_cast<double>(a), fb = static_cast<double>(b);
  double fc = static_cast<double>(c), fd = static_cast<double>(d);
  if (a == 0 || b == 0 || c == 0 || d == 0) {
    out.continuity_corrected = true;
    fa += 0.5;
    fb += 0.5;
    fc += 0.5;
    fd += 0.5;
  }
  const double log_or = std::log((fa * fd) / (fb * fc));
  const double se = std::sqrt(1.0 / fa + 1.0 / fb + 1.0 / fc + 1.0 / fd);
  out.odds_ratio = std::exp(log_or);
  out.ci_low = std::exp(log_or - 1.96 * se);
  out.ci_high = std::exp(log_or + 1.96 * se);
  return out;
}

OutcomeSummary outcome_2x2(std::span<const int> group_1, std::span<const int> group_2) {
  long long cells[4] = {0, 0, 0, 0};
  for (int y : group_1) {
    if (y != 0 && y != 1) throw std::invalid_argument("outcomes must be 0 or 1");
    ++cells[y == 1 ? 0 : 1];
  }
  for (int y : group_2) {
    if (y != 0 && y != 1) throw std::invalid_argument("outcomes must be 0 or 1");
    ++cells[y == 1 ? 2 : 3];
  }
  return outcome_2x2_counts(cells[0], cells[1], cells[2], cells[3]);
}

OutcomeSummary outcome_for_match(const SampleTable& data, const MatchResult& result) {
  std::set<std::size_t> treated, controls;
  for (const MatchedPair& p : result.pairs) {
    treated.insert(p.treated);
    controls.insert(p.control);
  }
  std::size_t excluded = 0;
  const auto collect = [&](const std::set<std::size_t>& rows) {
    std::vector<int> y;
    for (std::size_t r : rows) {
      if (data.outcome()[r]) {
        y.push_back(*data.outcome()[r]);
      } else {
        ++excluded;
      }
    }
    return y;
  };
  const std::vector<int> y1 = collect(treated);
  const std::vector<int> y2 = collect(controls);
  OutcomeSummary out = outcome_2x2(y1, y2);
  out.excluded = excluded;
  return out;
}

}  // namespace tripmatch
