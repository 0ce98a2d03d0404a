#include "tripmatch/max_matching.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace tripmatch {

namespace {

class HopcroftKarp {
 public:
  HopcroftKarp(const std::vector<std::vector<int>>& adjacency, int right_count)
      : adj_(adjacency),
        left_mate_(adjacency.size(), kUnmatched),
        right_mate_(static_cast<std::size_t>(right_count), kUnmatched),
        layer_(adjacency.size()),
        next_(adjacency.size()) {}

  CardinalityMatching run() {
    int size = 0;
    while (build_layers()) {
      std::fill(next_.begin(), next_.end(), 0);
      for (std::size_t l = 0; l < adj_.size(); ++l) {
        if (left_mate_[l] == kUnmatched && augment(static_cast<int>(l))) ++size;
      }
    }
    return {size, std::move(left_mate_), std::move(right_mate_)};
  }

 private:
  static constexpr int kFar = std::numeric_limits<int>::max();

  bool build_layers() {
    std::queue<int> frontier;
    for (std::size_t l = 0; l < adj_.size(); ++l) {
      if (left_mate_[l] == kUnmatched) {
        layer_[l] = 0;
        frontier.push(static_cast<int>(l));
      } else {
        layer_[l] = kFar;
      }
    }
    bool reached_free = false;
    while (!frontier.empty()) {
      const int l = frontier.front();
      frontier.pop();
      for (int r : adj_[static_cast<std::size_t>(l)]) {
        const int mate = right_mate_[static_cast<std::size_t>(r)];
        if (mate == kUnmatched) {
          reached_free = true;
        } else if (layer_[static_cast<std::size_t>(mate)] == kFar) {
          layer_[static_cast<std::size_t>(mate)] = layer_[static_cast<std::size_t>(l)] + 1;
          frontier.push(mate);
        }
      }
    }
    return reached_free;
  }

  bool augment(int l) {
    const auto& edges = adj_[static_cast<std::size_t>(l)];
    for (int& k = next_[static_cast<std::size_t>(l)]; k < static_cast<int>(edges.size()); ++k) {
      const int r = edges[static_cast<std::size_t>(k)];
      const int mate = right_mate_[static_cast<std::size_t>(r)];
      if (mate == kUnmatched ||
          (layer_[static_cast<std::size_t>(mate)] == layer_[static_cast<std::size_t>(l)] + 1 &&
           augment(mate))) {
        left_mate_[static_cast<std::size_t>(l)] = r;
        right_mate_[static_cast<std::size_t>(r)] = l;
        ++k;
        return true;
      }
    }
    layer_[static_cast<std::size_t>(l)] = kFar;
    return false;
  }

  const std::vector<std::vector<int>>& adj_;
  std::vector<int> left_mate_;
  std::vector<int> right_mate_;
  std::vector<int> layer_;
  std::vector<int> next_;
};

}  // namespace

CardinalityMatching maximum_bipartite_matching(const std::vector<std::vector<int>>& adjacency,
                                               int right_count) {
  return HopcroftKarp(adjacency, right_count).run();
}

}  // namespace tripmatch
