#include "tripmatch/netflow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

namespace tripmatch {

FlowNetwork::FlowNetwork(int node_count, NodeId source, NodeId sink,
                         std::vector<Arc> arcs, FlowValue required_flow)
    : node_count_(node_count),
      source_(source),
      sink_(sink),
      arcs_(std::move(arcs)),
      required_flow_(required_flow) {
  auto in_range = [this](NodeId v) { return v >= 0 && v < node_count_; };
  if (node_count_ <= 0) {
    throw std::invalid_argument("flow network needs at least one node");
  }
  if (!in_range(source_) || !in_range(sink_)) {
    throw std::invalid_argument("source or sink id outside the node range");
  }
  if (source_ == sink_) {
    throw std::invalid_argument("source and sink must be distinct nodes");
  }
  if (required_flow_ < 0) {
    throw std::invalid_argument("required flow must be nonnegative");
  }
  for (std::size_t i = 0; i < arcs_.size(); ++i) {
    const Arc& a = arcs_[i];
    const std::string tag = "arc " + std::to_string(i) + " (" +
                            std::to_string(a.from) + " -> " +
                            std::to_string(a.to) + ")";
    if (!in_range(a.from) || !in_range(a.to)) {
      throw std::invalid_argument(tag + ": dangling node id");
    }
    if (a.from == a.to) {
      throw std::invalid_argument(tag + ": self loop");
    }
    if (a.capacity < 0) {
      throw std::invalid_argument(tag + ": negative capacity");
    }
    if (a.cost < 0) {
      throw std::invalid_argument(tag + ": negative cost");
    }
    if (a.to == source_) {
      throw std::invalid_argument(tag + ": enters the source");
    }
    if (a.from == sink_) {
      throw std::invalid_argument(tag + ": leaves the sink");
    }
  }
}

namespace {

struct ResidualEdge {
  NodeId to;
  FlowValue residual;
  CostValue cost;
};

class SuccessiveShortestPaths {
 public:
  explicit SuccessiveShortestPaths(const FlowNetwork& network)
      : net_(network),
        n_(network.node_count()),
        edges_(2 * network.arc_count()),
        offsets_(n_ + 1, 0),
        adjacency_(2 * network.arc_count()),
        potential_(n_, 0),
        dist_(n_),
        parent_edge_(n_),
        done_(n_) {
    const auto& arcs = network.arcs();
    for (const Arc& a : arcs) {
      ++offsets_[a.from + 1];
      ++offsets_[a.to + 1];
    }
    for (int v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      const Arc& a = arcs[i];
      edges_[2 * i] = {a.to, a.capacity, a.cost};
      edges_[2 * i + 1] = {a.from, 0, -a.cost};
      adjacency_[fill[a.from]++] = 2 * i;
      adjacency_[fill[a.to]++] = 2 * i + 1;
    }
  }

  FlowSolution run() {
    FlowSolution out;
    FlowValue remaining = net_.required_flow();
    const NodeId s = net_.source();
    const NodeId t = net_.sink();
    while (remaining > 0) {
      if (!shortest_path(s, t)) break;
      FlowValue push = remaining;
      for (NodeId v = t; v != s; v = edges_[parent_edge_[v] ^ 1].to) {
        push = std::min(push, edges_[parent_edge_[v]].residual);
      }
      for (NodeId v = t; v != s; v = edges_[parent_edge_[v] ^ 1].to) {
        edges_[parent_edge_[v]].residual -= push;
        edges_[parent_edge_[v] ^ 1].residual += push;
      }
      remaining -= push;
    }
    if (remaining > 0) {
      out.flow.assign(net_.arc_count(), 0);
      out.feasible = false;
      return out;
    }
    out.flow.resize(net_.arc_count());
    for (std::size_t i = 0; i < net_.arc_count(); ++i) {
      out.flow[i] = edges_[2 * i + 1].residual;
      out.total_cost += out.flow[i] * net_.arcs()[i].cost;
    }
    out.feasible = true;
    return out;
  }

 private:
  static constexpr CostValue kInf = std::numeric_limits<CostValue>::max() / 4;

  // Dijkstra on reduced costs, stopped as soon as the sink is settled.
  // Potentials of unsettled nodes advance by the sink distance, which keeps
  // every residual reduced cost nonnegative.
  bool shortest_path(NodeId s, NodeId t) {
    std::fill(dist_.begin(), dist_.end(), kInf);
    std::fill(done_.begin(), done_.end(), char{0});
    using Item = std::pair<CostValue, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_[s] = 0;
    heap.emplace(0, s);
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (done_[u]) continue;
      done_[u] = 1;
      if (u == t) break;
      for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) {
        const std::size_t e = adjacency_[k];
        const ResidualEdge& edge = edges_[e];
        if (edge.residual <= 0 || done_[edge.to]) continue;
        const CostValue nd =
            d + edge.cost + potential_[u] - potential_[edge.to];
        if (nd < dist_[edge.to]) {
          dist_[edge.to] = nd;
          parent_edge_[edge.to] = e;
          heap.emplace(nd, edge.to);
        }
      }
    }
    if (!done_[t]) return false;
    const CostValue reach = dist_[t];
    for (NodeId v = 0; v < n_; ++v) {
      potential_[v] += done_[v] ? dist_[v] : reach;
    }
    return true;
  }

  const FlowNetwork& net_;
  int n_;
  std::vector<ResidualEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> adjacency_;
  std::vector<CostValue> potential_;
  std::vector<CostValue> dist_;
  std::vector<std::size_t> parent_edge_;
  std::vector<char> done_;
};

}  // namespace

FlowSolution solve_min_cost_flow(const FlowNetwork& network) {
  if (network.required_flow() == 0) {
    FlowSolution zero;
    zero.flow.assign(network.arc_count(), 0);
    zero.feasible = true;
    return zero;
  }
  return SuccessiveShortestPaths(network).run();
}

std::vector<FlowViolation> validate_flow(const FlowNetwork& network,
                                         const FlowSolution& solution) {
  std::vector<FlowViolation> out;
  const auto& arcs = network.arcs();
  if (solution.flow.size() != arcs.size()) {
    out.push_back({FlowCondition::capacity, arcs.size(),
                   "solution has " + std::to_string(solution.flow.size()) +
                       " arc flows, network has " +
                       std::to_string(arcs.size()) + " arcs"});
    return out;
  }
  std::vector<FlowValue> net_out(network.node_count(), 0);
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const FlowValue f = solution.flow[i];
    if (f < 0 || f > arcs[i].capacity) {
      out.push_back({FlowCondition::capacity, i,
                     "arc " + std::to_string(i) + " carries " +
                         std::to_string(f) + " outside [0, " +
                         std::to_string(arcs[i].capacity) + "]"});
    }
    net_out[arcs[i].from] += f;
    net_out[arcs[i].to] -= f;
  }
  const NodeId s = network.source();
  const NodeId t = network.sink();
  if (net_out[s] != network.required_flow()) {
    out.push_back({FlowCondition::supply, static_cast<std::size_t>(s),
                   "source emits " + std::to_string(net_out[s]) +
                       ", required " +
                       std::to_string(network.required_flow())});
  }
  if (-net_out[t] != network.required_flow()) {
    out.push_back({FlowCondition::supply, static_cast<std::size_t>(t),
                   "sink absorbs " + std::to_string(-net_out[t]) +
                       ", required " +
                       std::to_string(network.required_flow())});
  }
  for (NodeId v = 0; v < network.node_count(); ++v) {
    if (v == s || v == t || net_out[v] == 0) continue;
    out.push_back({FlowCondition::conservation, static_cast<std::size_t>(v),
                   "node " + std::to_string(v) + " has net outflow " +
                       std::to_string(net_out[v])});
  }
  return out;
}

CostValue scale_cost(double real_cost, int precision_digits) {
  if (precision_digits < 0 || precision_digits > 9) {
    throw std::invalid_argument("precision digits must lie in [0, 9]");
  }
  if (!std::isfinite(real_cost) || real_cost < 0.0) {
    throw std::invalid_argument("costs must be finite and nonnegative");
  }
  const double scaled = std::round(real_cost * std::pow(10.0, precision_digits));
  if (scaled > static_cast<double>(kMaxScaledCost)) {
    throw std::overflow_error(
        "cost " + std::to_string(real_cost) + " exceeds the integer cost range at " +
        std::to_string(precision_digits) + " digits; use a lower precision");
  }
  return static_cast<CostValue>(scaled);
}

std::vector<CostValue> scale_costs(std::span<const double> real_costs,
                                   int precision_digits) {
  std::vector<CostValue> out;
  out.reserve(real_costs.size());
  for (double c : real_costs) out.push_back(scale_cost(c, precision_digits));
  return out;
}

}  // namespace tripmatch
