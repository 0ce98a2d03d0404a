#ifndef TRIPMATCH_MAX_MATCHING_HPP_
#define TRIPMATCH_MAX_MATCHING_HPP_

#include <vector>

namespace tripmatch {

inline constexpr int kUnmatched = -1;

struct CardinalityMatching {
  int size = 0;
  std::vector<int> left_mate;   // right index or kUnmatched
  std::vector<int> right_mate;  // left index or kUnmatched
};

// Hopcroft-Karp maximum-cardinality matching. adjacency[l] lists the right
// vertices (0..right_count-1) adjacent to left vertex l.
CardinalityMatching maximum_bipartite_matching(const std::vector<std::vector<int>>& adjacency,
                                               int right_count);

}  // namespace tripmatch

#endif  // TRIPMATCH_MAX_MATCHING_HPP_
