#include "tripmatch/tripartite.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tripmatch {

namespace {

struct Sizing {
  FlowValue kappa;
  FlowValue kappa_prime;
  FlowValue flow;
};

Sizing check_sizes(const TripartiteSpec& spec) {
  if (spec.l1 == 0 || spec.l2 == 0 || spec.l3 == 0) {
    throw TripartiteError("every layer needs at least one unit");
  }
  if (spec.left_dist.n_left != spec.l1 || spec.left_dist.n_right != spec.l2) {
    throw TripartiteError("left distance list must span L1 x L2");
  }
  if (spec.right_dist.n_left != spec.l2 || spec.right_dist.n_right != spec.l3) {
    throw TripartiteError("right distance list must span L2 x L3");
  }
  if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) {
    throw TripartiteError("lambda must be finite and nonnegative");
  }
  const auto l1 = static_cast<FlowValue>(spec.l1);
  const auto l2 = static_cast<FlowValue>(spec.l2);
  const auto l3 = static_cast<FlowValue>(spec.l3);
  if (spec.rule == CapacityRule::pair_through) {
    if (l1 > l2 || l1 > l3) {
      throw TripartiteError("pair-through rule requires L1 <= L2 and L1 <= L3");
    }
    return {1, 1, l1};
  }
  const FlowValue lcm = std::lcm(l1, l3);
  if (spec.strict_sizes) {
    if (!(l2 > std::max(l1, l3))) {
      throw TripartiteError("size condition L2 > max(L1, L3) violated: L1=" +
                            std::to_string(l1) + " L2=" + std::to_string(l2) +
                            " L3=" + std::to_string(l3));
    }
    if (!(l2 > lcm)) {
      throw TripartiteError("size condition L2 > LCM(L1, L3) violated: L2=" +
                            std::to_string(l2) + " LCM=" + std::to_string(lcm));
    }
  } else if (l2 < lcm) {
    throw TripartiteError("size condition L2 >= LCM(L1, L3) violated: L2=" +
                          std::to_string(l2) + " LCM=" + std::to_string(lcm));
  }
  return {lcm / l1, lcm / l3, lcm};
}

// Empty when every tau (and, under the LCM rule, every omega) has an edge.
std::pair<std::string, std::string> degree_problem(const TripartiteSpec& spec) {
  if (!spec.left_dist.feasible_by_construction()) {
    return {"left", "left unit " + std::to_string(spec.left_dist.isolated_left.front()) +
                        " has no edge into the middle layer"};
  }
  if (spec.rule == CapacityRule::lcm) {
    const auto lonely = isolated_right(spec.right_dist);
    if (!lonely.empty()) {
      return {"right", "right unit " + std::to_string(lonely.front() + 1) +
                           " has no edge from the middle layer"};
    }
  }
  return {};
}

// Can `flow` units cross a single side on its own?
bool side_feasible(const DistanceList& list, FlowValue source_cap, FlowValue sink_cap,
                   FlowValue flow) {
  const auto n_l = static_cast<int>(list.n_left);
  const auto n_r = static_cast<int>(list.n_right);
  const int source = 0;
  const int sink = n_l + n_r + 1;
  std::vector<Arc> arcs;
  for (int i = 0; i < n_l; ++i) arcs.push_back({source, 1 + i, source_cap, 0});
  for (std::size_t e = 0; e < list.size(); ++e) {
    arcs.push_back({static_cast<int>(1 + list.left_of(e)),
                    static_cast<int>(1 + list.n_left + list.right_of(e)), 1, 0});
  }
  for (int j = 0; j < n_r; ++j) arcs.push_back({1 + n_l + j, sink, sink_cap, 0});
  return solve_min_cost_flow(FlowNetwork(sink + 1, source, sink, std::move(arcs), flow)).feasible;
}

}  // namespace

TripartiteNetwork build_tripartite(const TripartiteSpec& spec) {
  const Sizing size = check_sizes(spec);
  if (auto [side, why] = degree_problem(spec); !side.empty()) throw TripartiteError(why);

  const auto l1 = static_cast<int>(spec.l1);
  const auto l2 = static_cast<int>(spec.l2);
  const auto l3 = static_cast<int>(spec.l3);
  const int source = 0;
  const auto tau = [](std::size_t i) { return static_cast<int>(1 + i); };
  const auto gamma = [l1](std::size_t i) { return static_cast<int>(1 + l1 + static_cast<int>(i)); };
  const auto gamma_bar = [l1, l2](std::size_t i) {
    return static_cast<int>(1 + l1 + l2 + static_cast<int>(i));
  };
  const auto omega = [l1, l2](std::size_t i) {
    return static_cast<int>(1 + l1 + 2 * l2 + static_cast<int>(i));
  };
  const int sink = 1 + l1 + 2 * l2 + l3;
  const int node_count = l1 + 2 * l2 + l3 + 2;

  std::vector<CostValue> left_scaled = scale_costs(spec.left_dist.d, spec.precision_digits);
  std::vector<CostValue> right_scaled = scale_costs(spec.right_dist.d, spec.precision_digits);
  const CostValue left_weight = static_cast<CostValue>(std::llround(std::pow(10.0, kLambdaDigits)));
  const CostValue right_weight = scale_cost(spec.lambda, kLambdaDigits);
  const CostValue limit = kMaxScaledCost * left_weight;
  for (CostValue c : right_scaled) {
    if (right_weight > 0 && c > limit / right_weight) {
      throw std::overflow_error("lambda-weighted right cost overflows; lower lambda or precision");
    }
  }

  std::vector<Arc> arcs;
  arcs.reserve(spec.l1 + spec.left_dist.size() + spec.l2 + spec.right_dist.size() + spec.l3);
  for (std::size_t i = 0; i < spec.l1; ++i) arcs.push_back({source, tau(i), size.kappa, 0});
  const std::size_t first_left_arc = arcs.size();
  for (std::size_t e = 0; e < spec.left_dist.size(); ++e) {
    arcs.push_back({tau(spec.left_dist.left_of(e)), gamma(spec.left_dist.right_of(e)), 1,
                    left_scaled[e] * left_weight});
  }
  for (std::size_t g = 0; g < spec.l2; ++g) arcs.push_back({gamma(g), gamma_bar(g), 1, 0});
  const std::size_t first_right_arc = arcs.size();
  for (std::size_t e = 0; e < spec.right_dist.size(); ++e) {
    arcs.push_back({gamma_bar(spec.right_dist.left_of(e)), omega(spec.right_dist.right_of(e)),
                    1, right_scaled[e] * right_weight});
  }
  for (std::size_t w = 0; w < spec.l3; ++w) arcs.push_back({omega(w), sink, size.kappa_prime, 0});
  return {FlowNetwork(node_count, source, sink, std::move(arcs), size.flow),
          size.kappa,
          size.kappa_prime,
          first_left_arc,
          first_right_arc,
          std::move(left_scaled),
          std::move(right_scaled)};
}

TripartiteMatch solve_tripartite(const TripartiteSpec& spec) {
  const Sizing size = check_sizes(spec);
  TripartiteMatch out;
  if (auto [side, why] = degree_problem(spec); !side.empty()) {
    out.failing_side = side;
    out.failure = why;
    return out;
  }
  const TripartiteNetwork built = build_tripartite(spec);
  const FlowSolution sol = solve_min_cost_flow(built.network);
  if (!sol.feasible) {
    if (!side_feasible(spec.left_dist, size.kappa, 1, size.flow)) {
      out.failing_side = "left";
    } else if (!side_feasible(spec.right_dist, 1, size.kappa_prime, size.flow)) {
      out.failing_side = "right";
    } else {
      out.failing_side = "joint";
    }
    out.failure = "no feasible flow of " + std::to_string(size.flow) + " units (" +
                  out.failing_side + " side)";
    return out;
  }
  out.feasible = true;
  for (std::size_t e = 0; e < spec.left_dist.size(); ++e) {
    if (sol.flow[built.first_left_arc + e] == 0) continue;
    out.left_pairs.emplace_back(spec.left_dist.left_of(e), spec.left_dist.right_of(e));
    out.total_left_cost += spec.left_dist.d[e];
    out.scaled_left_cost += built.left_scaled[e];
  }
  for (std::size_t e = 0; e < spec.right_dist.size(); ++e) {
    if (sol.flow[built.first_right_arc + e] == 0) continue;
    out.right_pairs.emplace_back(spec.right_dist.left_of(e), spec.right_dist.right_of(e));
    out.total_right_cost += spec.right_dist.d[e];
    out.scaled_right_cost += built.right_scaled[e];
  }
  std::sort(out.left_pairs.begin(), out.left_pairs.end());
  std::sort(out.right_pairs.begin(), out.right_pairs.end());
  return out;
}

}  // namespace tripmatch
