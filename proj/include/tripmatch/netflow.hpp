#ifndef TRIPMATCH_NETFLOW_HPP_
#define TRIPMATCH_NETFLOW_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tripmatch {

using NodeId = int;
using FlowValue = std::int64_t;
using CostValue = std::int64_t;

struct Arc {
  NodeId from = 0;
  NodeId to = 0;
  FlowValue capacity = 0;
  CostValue cost = 0;
};

// A directed network with a single source supplying `required_flow` units
// that must all be absorbed at the sink. Capacities and costs are integral
// and nonnegative. The constructor validates everything; the object is
// immutable afterwards.
class FlowNetwork {
 public:
  FlowNetwork(int node_count, NodeId source, NodeId sink,
              std::vector<Arc> arcs, FlowValue required_flow);

  int node_count() const { return node_count_; }
  NodeId source() const { return source_; }
  NodeId sink() const { return sink_; }
  FlowValue required_flow() const { return required_flow_; }
  const std::vector<Arc>& arcs() const { return arcs_; }
  std::size_t arc_count() const { return arcs_.size(); }

 private:
  int node_count_;
  NodeId source_;
  NodeId sink_;
  std::vector<Arc> arcs_;
  FlowValue required_flow_;
};

struct FlowSolution {
  std::vector<FlowValue> flow;  // indexed like FlowNetwork::arcs()
  CostValue total_cost = 0;
  bool feasible = false;
};

// Minimum-cost flow of value required_flow by successive shortest
// augmenting paths (Dijkstra on reduced costs). Infeasibility is reported
// through FlowSolution::feasible, never thrown. Among equal-cost optima the
// result is determined by arc insertion order.
FlowSolution solve_min_cost_flow(const FlowNetwork& network);

enum class FlowCondition {
  capacity,      // 0 <= f(e) <= cap(e)
  supply,        // everything leaving the source reaches the sink
  conservation,  // inflow == outflow at interior nodes
};

struct FlowViolation {
  FlowCondition condition;
  // Arc index for capacity violations, node id otherwise.
  std::size_t where;
  std::string message;
};

std::vector<FlowViolation> validate_flow(const FlowNetwork& network,
                                         const FlowSolution& solution);

inline constexpr int kDefaultPrecisionDigits = 3;

// Largest scaled cost accepted by scale_costs. Leaves headroom for sums
// over a few million arcs without overflowing 64 bits.
inline constexpr CostValue kMaxScaledCost = 1'000'000'000'000LL;

// Maps nonnegative real costs onto integers round(c * 10^digits).
// Throws std::invalid_argument on negative/non-finite input or digits
// outside [0, 9], std::overflow_error when a cost leaves the integer range.
std::vector<CostValue> scale_costs(std::span<const double> real_costs,
                                   int precision_digits = kDefaultPrecisionDigits);
CostValue scale_cost(double real_cost, int precision_digits = kDefaultPrecisionDigits);

}  // namespace tripmatch

#endif  // TRIPMATCH_NETFLOW_HPP_
