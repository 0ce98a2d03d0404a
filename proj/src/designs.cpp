#include "tripmatch/designs.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "tripmatch/parallel.hpp"
#include "tripmatch/propensity.hpp"
#include "tripmatch/random.hpp"

namespace tripmatch {

namespace {

// Distance of edge (left, right) in a (start_n, end_n)-ordered list.
double edge_distance(const DistanceList& list, std::size_t left, std::size_t right) {
  const int start = static_cast<int>(left + 1);
  const int end = static_cast<int>(list.n_left + right + 1);
  auto lo = std::lower_bound(list.start_n.begin(), list.start_n.end(), start);
  auto first = static_cast<std::size_t>(lo - list.start_n.begin());
  for (std::size_t e = first; e < list.size() && list.start_n[e] == start; ++e) {
    if (list.end_n[e] == end) return list.d[e];
  }
  throw std::logic_error("selected arc missing from distance list");
}

// Scores for `left_rows` and `right_rows` from a logistic fit of left (z=1)
// against right (z=0) on `covariates`. Empty when the options need none.
std::pair<std::vector<double>, std::vector<double>> side_scores(
    const SampleTable& table, std::span<const std::size_t> left_rows,
    std::span<const std::size_t> right_rows, std::span<const std::string> covariates,
    const ListOptions& options) {
  if (!needs_scores(options)) return {};
  std::vector<std::size_t> rows(left_rows.begin(), left_rows.end());
  rows.insert(rows.end(), right_rows.begin(), right_rows.end());
  std::vector<int> z(left_rows.size(), 1);
  z.resize(rows.size(), 0);
  const PropensityModel model = estimate_propensity(table, rows, z, covariates);
  return {model.scores(table, left_rows), model.scores(table, right_rows)};
}

MatchResult pairs_from(const std::vector<std::pair<std::size_t, std::size_t>>& index_pairs,
                       const DistanceList& list, std::span<const std::size_t> left_rows,
                       std::span<const std::size_t> right_rows) {
  MatchResult out;
  out.feasible = true;
  for (auto [l, r] : index_pairs) {
    out.pairs.push_back({l, r, edge_distance(list, l, r)});
  }
  return to_rows(out, left_rows, right_rows);
}

DesignResult infeasible(std::string side, std::string why) {
  DesignResult out;
  out.failing_side = std::move(side);
  out.match.failure = std::move(why);
  return out;
}

DesignResult from_network(TripartiteMatch net) {
  DesignResult out;
  out.failing_side = net.failing_side;
  out.match.failure = net.failure;
  out.network = std::move(net);
  return out;
}

}  // namespace

DesignResult disparity_match(const SampleTable& data, std::span<const std::string> x,
                             std::span<const std::string> x_tilde,
                             const DisparityOptions& options) {
  if (x.empty()) throw std::invalid_argument("at least one matching covariate is required");
  const std::set<std::string> matched(x.begin(), x.end());
  for (const std::string& name : x_tilde) {
    if (matched.count(name) != 0) {
      throw std::invalid_argument("covariate '" + name +
                                  "' cannot be both matched and preserved");
    }
  }
  const std::vector<std::size_t> b = data.treated_rows();
  const std::vector<std::size_t> w = data.control_rows();
  if (b.empty() || w.size() <= b.size()) {
    throw std::invalid_argument("need more control units (" + std::to_string(w.size()) +
                                ") than treated units (" + std::to_string(b.size()) + ")");
  }
  const std::vector<std::size_t> w_ref = sample_without_replacement(w, b.size(), options.seed);

  const auto [b_scores, w_scores] = side_scores(data, b, w, x, options.left);
  const DistanceList left = create_list_from_scratch(data, b, w, x, b_scores, w_scores, options.left);

  const auto pair_only = [&]() {
    DesignResult out;
    if (!left.feasible_by_construction()) {
      out = infeasible("left", "treated row " + std::to_string(b[left.isolated_left.front() - 1]) +
                                   " has no admissible control");
    } else {
      out.match = to_rows(match_optimal(left, {1, std::nullopt, options.precision_digits}), b, w);
      if (!out.match.feasible) out.failing_side = "left";
    }
    out.reference_sample = w_ref;
    return out;
  };
  if (x_tilde.empty() && options.lambda == 0.0) return pair_only();
  if (x_tilde.empty()) {
    // Nothing to preserve: the right side balances the propensity score on X
    // between the selected controls and B.
    BalancedPairOptions balanced;
    balanced.lambda = options.lambda;
    balanced.left = options.left;
    balanced.precision_digits = options.precision_digits;
    try {
      DesignResult out = balanced_pair_match(data, x, x, balanced);
      out.reference_sample = w_ref;
      return out;
    } catch (const FitError& e) {
      DesignResult out = pair_only();
      out.note = std::string("propensity balance skipped (") + e.what() + "); plain pair match on X";
      return out;
    }
  }

  // Built with W' as the left side so that k and calipers act per reference
  // unit, which then keeps at least one edge each.
  const auto [ref_scores, pool_scores] = side_scores(data, w_ref, w, x_tilde, options.right);
  const DistanceList right = transpose(
      create_list_from_scratch(data, w_ref, w, x_tilde, ref_scores, pool_scores, options.right));

  TripartiteSpec spec;
  spec.l1 = b.size();
  spec.l2 = w.size();
  spec.l3 = w_ref.size();
  spec.left_dist = left;
  spec.right_dist = right;
  spec.lambda = options.lambda;
  spec.precision_digits = options.precision_digits;
  DesignResult out = from_network(solve_tripartite(spec));
  out.reference_sample = w_ref;
  if (out.network->feasible) out.match = pairs_from(out.network->left_pairs, left, b, w);
  return out;
}

std::vector<DesignResult> nested_designs(const SampleTable& data,
                                         const std::vector<std::vector<std::string>>& partitions,
                                         const DisparityOptions& options) {
  if (partitions.empty()) throw std::invalid_argument("at least one partition is required");
  std::set<std::string> seen;
  for (const auto& part : partitions) {
    if (part.empty()) throw std::invalid_argument("partitions must not be empty");
    for (const std::string& name : part) {
      if (!seen.insert(name).second) {
        throw std::invalid_argument("covariate '" + name + "' appears in two partitions");
      }
    }
  }
  std::vector<DesignResult> out(partitions.size());
  parallel_for(partitions.size(), [&](std::size_t i) {
    std::vector<std::string> x, x_tilde;
    for (std::size_t p = 0; p < partitions.size(); ++p) {
      auto& dest = p <= i ? x : x_tilde;
      dest.insert(dest.end(), partitions[p].begin(), partitions[p].end());
    }
    out[i] = disparity_match(data, x, x_tilde, options);
    if (!out[i].match.feasible) {
      out[i].match.failure = "design M" + std::to_string(i + 1) + ": " + out[i].match.failure;
    }
  });
  return out;
}

DesignResult balanced_pair_match(const SampleTable& data,
                                 std::span<const std::string> pair_covariates,
                                 std::span<const std::string> balance_covariates,
                                 const BalancedPairOptions& options) {
  const std::vector<std::size_t> t = data.treated_rows();
  const std::vector<std::size_t> c = data.control_rows();
  if (t.empty() || c.size() < t.size()) {
    throw std::invalid_argument("need at least as many controls (" + std::to_string(c.size()) +
                                ") as treated units (" + std::to_string(t.size()) + ")");
  }
  const auto [tl, cl] = side_scores(data, t, c, pair_covariates, options.left);
  const DistanceList left =
      create_list_from_scratch(data, t, c, pair_covariates, tl, cl, options.left);
  const auto [tr, cr] = side_scores(data, t, c, balance_covariates, options.right);
  const DistanceList right = transpose(
      create_list_from_scratch(data, t, c, balance_covariates, tr, cr, options.right));

  TripartiteSpec spec;
  spec.l1 = t.size();
  spec.l2 = c.size();
  spec.l3 = t.size();
  spec.left_dist = left;
  spec.right_dist = right;
  spec.lambda = options.lambda;
  spec.strict_sizes = false;
  spec.precision_digits = options.precision_digits;
  DesignResult out = from_network(solve_tripartite(spec));
  if (out.network->feasible) out.match = pairs_from(out.network->left_pairs, left, t, c);
  return out;
}

namespace {

// Copies `names` from the data rows, then the template rows, into one table.
// Template ids get a prefix; covariates the template lacks are filled with
// placeholders that never enter a computation over template rows.
SampleTable stack_with_template(const SampleTable& data, const SampleTable& tmpl,
                                std::span<const std::string> names,
                                std::span<const std::string> template_names) {
  SampleTable out;
  for (std::size_t r = 0; r < data.row_count(); ++r) {
    out.add_row(data.ids()[r], data.group()[r], data.outcome()[r]);
  }
  for (std::size_t r = 0; r < tmpl.row_count(); ++r) {
    out.add_row("template:" + tmpl.ids()[r], 1);
  }
  const std::set<std::string> from_template(template_names.begin(), template_names.end());
  std::set<std::string> done;
  for (const std::string& name : names) {
    if (!done.insert(name).second) continue;
    const Covariate& cov = data.covariate(name);
    const Covariate* other = from_template.count(name) != 0 ? &tmpl.covariate(name) : nullptr;
    if (other != nullptr && other->kind != cov.kind) {
      throw std::invalid_argument("covariate '" + name + "' has a different kind in the template");
    }
    if (cov.kind == CovariateKind::numeric) {
      std::vector<double> values = cov.numeric;
      for (std::size_t r = 0; r < tmpl.row_count(); ++r) {
        values.push_back(other != nullptr ? other->numeric[r] : 0.0);
      }
      out.add_numeric(name, std::move(values));
    } else {
      std::vector<std::string> values;
      values.reserve(cov.size() + tmpl.row_count());
      for (std::size_t r = 0; r < cov.size(); ++r) values.push_back(cov.level_of(r));
      for (std::size_t r = 0; r < tmpl.row_count(); ++r) {
        values.push_back(other != nullptr ? other->level_of(r) : std::string(kMissingLevel));
      }
      out.add_categorical(name, values);
    }
  }
  return out;
}

}  // namespace

DesignResult template_match(const SampleTable& data, const SampleTable& template_units,
                            std::span<const std::string> generalize_covariates,
                            std::span<const std::string> pair_covariates,
                            const TemplateOptions& options) {
  const std::vector<std::size_t> t = data.treated_rows();
  const std::vector<std::size_t> c = data.control_rows();
  const std::size_t n_r = template_units.row_count();
  if (n_r == 0 || n_r > t.size() || t.size() > c.size()) {
    throw std::invalid_argument("template matching needs |template| <= treated <= controls, got " +
                                std::to_string(n_r) + ", " + std::to_string(t.size()) + ", " +
                                std::to_string(c.size()));
  }
  std::vector<std::string> names(generalize_covariates.begin(), generalize_covariates.end());
  names.insert(names.end(), pair_covariates.begin(), pair_covariates.end());
  const SampleTable stacked = stack_with_template(data, template_units, names, generalize_covariates);
  std::vector<std::size_t> r(n_r);
  for (std::size_t i = 0; i < n_r; ++i) r[i] = data.row_count() + i;

  const auto [rl, tl] = side_scores(stacked, r, t, generalize_covariates, options.left);
  const DistanceList left =
      create_list_from_scratch(stacked, r, t, generalize_covariates, rl, tl, options.left);
  const auto [tr, cr] = side_scores(stacked, t, c, pair_covariates, options.right);
  const DistanceList right =
      create_list_from_scratch(stacked, t, c, pair_covariates, tr, cr, options.right);

  TripartiteSpec spec;
  spec.l1 = n_r;
  spec.l2 = t.size();
  spec.l3 = c.size();
  spec.left_dist = left;
  spec.right_dist = right;
  spec.lambda = options.lambda;
  spec.rule = CapacityRule::pair_through;
  spec.precision_digits = options.precision_digits;
  DesignResult out = from_network(solve_tripartite(spec));
  if (out.network->feasible) out.match = pairs_from(out.network->right_pairs, right, t, c);
  return out;
}

}  // namespace tripmatch
