#ifndef TRIPMATCH_TRIPARTITE_HPP_
#define TRIPMATCH_TRIPARTITE_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tripmatch/distances.hpp"
#include "tripmatch/netflow.hpp"

namespace tripmatch {

// How source/sink capacities and the flow value are chosen.
enum class CapacityRule {
  // kappa = LCM(L1, L3) / L1 on source arcs, kappa' = LCM / L3 on sink
  // arcs, flow = LCM: a 1-to-kappa match on the left and a 1-to-kappa'
  // match on the right.
  lcm,
  // kappa = kappa' = 1 and flow = L1: every left unit picks one middle
  // unit, which is paired to one right unit (template matching).
  pair_through,
};

// Layers: tau (L1) -> gamma (L2) -> gamma-bar (L2) -> omega (L3).
struct TripartiteSpec {
  std::size_t l1 = 0;
  std::size_t l2 = 0;
  std::size_t l3 = 0;
  // delta(tau, gamma): L1 x L2 list.
  DistanceList left_dist;
  // Delta(gamma-bar, omega): L2 x L3 list.
  DistanceList right_dist;
  double lambda = 10.0;
  CapacityRule rule = CapacityRule::lcm;
  // Under the LCM rule, demand L2 > max(L1, L3) and L2 > LCM(L1, L3).
  // Relaxed to L2 >= LCM when false.
  bool strict_sizes = true;
  int precision_digits = kDefaultPrecisionDigits;
};

class TripartiteError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Weight applied to right-side integer costs is round(lambda * 10^3); left
// costs are multiplied by 10^3. The objective stays exactly linear in the
// effective lambda.
inline constexpr int kLambdaDigits = 3;

struct TripartiteNetwork {
  FlowNetwork network;
  FlowValue kappa = 0;
  FlowValue kappa_prime = 0;
  // Arc index ranges of the (tau, gamma) and (gamma-bar, omega) edges, in
  // list order.
  std::size_t first_left_arc = 0;
  std::size_t first_right_arc = 0;
  // Unweighted integer costs per list edge.
  std::vector<CostValue> left_scaled;
  std::vector<CostValue> right_scaled;
};

// Throws TripartiteError naming the violated size condition or the unit
// left without edges.
TripartiteNetwork build_tripartite(const TripartiteSpec& spec);

struct TripartiteMatch {
  bool feasible = false;
  // (tau, gamma) and (gamma, omega) index pairs with unit flow, ordered.
  std::vector<std::pair<std::size_t, std::size_t>> left_pairs;
  std::vector<std::pair<std::size_t, std::size_t>> right_pairs;
  // Unweighted sums of the real distances on the chosen arcs.
  double total_left_cost = 0.0;
  double total_right_cost = 0.0;
  // Same sums on the integer-scaled costs.
  CostValue scaled_left_cost = 0;
  CostValue scaled_right_cost = 0;
  // "left", "right" or "joint" when infeasible.
  std::string failing_side;
  std::string failure;

  double objective(double lambda) const { return total_left_cost + lambda * total_right_cost; }
};

// Minimizes sum(delta) + lambda * sum(Delta) over feasible flows.
TripartiteMatch solve_tripartite(const TripartiteSpec& spec);

}  // namespace tripmatch

#endif  // TRIPMATCH_TRIPARTITE_HPP_
