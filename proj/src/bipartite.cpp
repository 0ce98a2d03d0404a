#include "tripmatch/bipartite.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace tripmatch {

double MatchResult::total_distance() const {
  double total = 0.0;
  for (const MatchedPair& p : pairs) total += p.distance;
  return total;
}

namespace {

MatchResult infeasible(std::string why) {
  MatchResult r;
  r.feasible = false;
  r.failure = std::move(why);
  return r;
}

void sort_pairs(std::vector<MatchedPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const MatchedPair& a, const MatchedPair& b) {
    return a.treated != b.treated ? a.treated < b.treated : a.control < b.control;
  });
}

}  // namespace

MatchResult match_optimal(const DistanceList& list, const BipartiteOptions& options) {
  if (options.controls == 0) {
    throw std::invalid_argument("controls per treated unit must be at least 1");
  }
  const std::size_t n_l = list.n_left;
  const std::size_t n_r = list.n_right;
  if (n_r < options.controls * n_l) {
    return infeasible("only " + std::to_string(n_r) + " controls for " + std::to_string(n_l) +
                      " treated units at " + std::to_string(options.controls) + " each");
  }
  if (!list.feasible_by_construction()) {
    return infeasible("treated node " + std::to_string(list.isolated_left.front()) +
                      " has no candidate control; increase the caliper");
  }

  const std::vector<CostValue> costs = scale_costs(list.d, options.precision_digits);
  const CostValue max_cost = costs.empty() ? 0 : *std::max_element(costs.begin(), costs.end());
  const auto flow = static_cast<FlowValue>(options.controls * n_l);

  const int source = 0;
  const auto left_node = [](std::size_t i) { return static_cast<NodeId>(1 + i); };
  const auto right_node = [n_l](std::size_t j) { return static_cast<NodeId>(1 + n_l + j); };
  int next_node = static_cast<int>(1 + n_l + n_r);

  std::vector<Arc> arcs;
  arcs.reserve(n_l + list.size() + n_r + 8);
  for (std::size_t i = 0; i < n_l; ++i) {
    arcs.push_back({source, left_node(i), static_cast<FlowValue>(options.controls), 0});
  }
  const std::size_t first_edge_arc = arcs.size();
  for (std::size_t e = 0; e < list.size(); ++e) {
    arcs.push_back({left_node(list.left_of(e)), right_node(list.right_of(e)), 1, costs[e]});
  }

  if (!options.near_fine_balance) {
    const int sink = next_node++;
    for (std::size_t j = 0; j < n_r; ++j) arcs.push_back({right_node(j), sink, 1, 0});
    FlowNetwork net(next_node, source, sink, std::move(arcs), flow);
    const FlowSolution sol = solve_min_cost_flow(net);
    if (!sol.feasible) return infeasible("no assignment covers every treated unit");
    MatchResult out;
    out.feasible = true;
    for (std::size_t e = 0; e < list.size(); ++e) {
      if (sol.flow[first_edge_arc + e] > 0) {
        out.pairs.push_back({list.left_of(e), list.right_of(e), list.d[e]});
      }
    }
    sort_pairs(out.pairs);
    return out;
  }

  const NearFineBalance& fb = *options.near_fine_balance;
  if (fb.left_category.size() != n_l || fb.right_category.size() != n_r) {
    throw std::invalid_argument("near-fine balance needs one category per left and right node");
  }
  std::map<int, std::size_t> category_index;
  for (int c : fb.left_category) category_index.emplace(c, 0);
  for (int c : fb.right_category) category_index.emplace(c, 0);
  std::size_t k = 0;
  for (auto& [c, idx] : category_index) idx = k++;
  std::vector<FlowValue> target(category_index.size(), 0);
  for (int c : fb.left_category) target[category_index[c]] += static_cast<FlowValue>(options.controls);

  CostValue penalty = 0;
  if (fb.penalty) {
    penalty = scale_cost(*fb.penalty, options.precision_digits);
  } else {
    // Any change in total distance is bounded by flow * max_cost, so one
    // unit of excess must cost more than that.
    penalty = std::max<CostValue>(10 * max_cost, flow * max_cost + 1);
  }

  const int first_category = next_node;
  next_node += static_cast<int>(category_index.size());
  const int overflow = next_node++;
  const int sink = next_node++;
  for (std::size_t j = 0; j < n_r; ++j) {
    arcs.push_back({right_node(j),
                    first_category + static_cast<int>(category_index[fb.right_category[j]]), 1, 0});
  }
  for (std::size_t c = 0; c < target.size(); ++c) {
    const int node = first_category + static_cast<int>(c);
    arcs.push_back({node, sink, target[c], 0});
    arcs.push_back({node, overflow, static_cast<FlowValue>(n_r), penalty});
  }
  arcs.push_back({overflow, sink, flow, 0});
  FlowNetwork net(next_node, source, sink, std::move(arcs), flow);
  const FlowSolution sol = solve_min_cost_flow(net);
  if (!sol.feasible) return infeasible("no assignment covers every treated unit");
  MatchResult out;
  out.feasible = true;
  for (std::size_t e = 0; e < list.size(); ++e) {
    if (sol.flow[first_edge_arc + e] > 0) {
      out.pairs.push_back({list.left_of(e), list.right_of(e), list.d[e]});
    }
  }
  sort_pairs(out.pairs);
  return out;
}

MatchResult match_greedy(const DistanceList& list) {
  std::vector<std::size_t> order(list.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (list.d[a] != list.d[b]) return list.d[a] < list.d[b];
    if (list.left_of(a) != list.left_of(b)) return list.left_of(a) < list.left_of(b);
    return list.right_of(a) < list.right_of(b);
  });
  std::vector<char> left_used(list.n_left, 0), right_used(list.n_right, 0);
  MatchResult out;
  for (std::size_t e : order) {
    const std::size_t i = list.left_of(e);
    const std::size_t j = list.right_of(e);
    if (left_used[i] || right_used[j]) continue;
    left_used[i] = right_used[j] = 1;
    out.pairs.push_back({i, j, list.d[e]});
  }
  if (out.pairs.size() != list.n_left) {
    const auto stuck = static_cast<std::size_t>(
        std::find(left_used.begin(), left_used.end(), 0) - left_used.begin());
    return infeasible("greedy pass exhausted the controls of treated node " +
                      std::to_string(stuck + 1));
  }
  out.feasible = true;
  sort_pairs(out.pairs);
  return out;
}

std::size_t category_deviation(const MatchResult& result, std::span<const int> left_category,
                               std::span<const int> right_category, std::size_t controls) {
  std::map<int, long long> balance;
  for (int c : left_category) balance[c] += static_cast<long long>(controls);
  for (const MatchedPair& p : result.pairs) --balance[right_category[p.control]];
  std::size_t total = 0;
  for (const auto& [c, v] : balance) total += static_cast<std::size_t>(v < 0 ? -v : v);
  return total;
}

MatchResult to_rows(const MatchResult& result, std::span<const std::size_t> left_rows,
                    std::span<const std::size_t> right_rows) {
  MatchResult out = result;
  for (MatchedPair& p : out.pairs) {
    p.treated = left_rows[p.treated];
    p.control = right_rows[p.control];
  }
  sort_pairs(out.pairs);
  return out;
}

std::vector<std::optional<int>> matched_set_labels(const MatchResult& result,
                                                   std::size_t row_count) {
  std::vector<std::optional<int>> labels(row_count);
  int next = 0;
  std::optional<std::size_t> current;
  for (const MatchedPair& p : result.pairs) {
    if (!current || *current != p.treated) {
      current = p.treated;
      labels[p.treated] = ++next;
    }
    labels[p.control] = next;
  }
  return labels;
}

std::vector<std::optional<double>> matched_distances(const MatchResult& result,
                                                     std::size_t row_count) {
  std::vector<std::optional<double>> out(row_count);
  for (const MatchedPair& p : result.pairs) out[p.control] = p.distance;
  return out;
}

std::vector<ReportRow> summarize_match(const MatchResult& result, const SampleTable& data) {
  if (!result.feasible) {
    throw std::invalid_argument("cannot summarize an infeasible match");
  }
  std::vector<ReportRow> rows;
  int label = 0;
  std::optional<std::size_t> current;
  for (const MatchedPair& p : result.pairs) {
    if (p.treated >= data.row_count() || p.control >= data.row_count()) {
      throw std::out_of_range("match refers to a row outside the table");
    }
    if (!current || *current != p.treated) {
      current = p.treated;
      rows.push_back({p.treated, ++label, true, std::nullopt});
    }
    rows.push_back({p.control, label, false, p.distance});
  }
  return rows;
}

}  // namespace tripmatch
