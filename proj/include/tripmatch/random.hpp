#ifndef TRIPMATCH_RANDOM_HPP_
#define TRIPMATCH_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tripmatch {

// `count` distinct entries of `population`, drawn by a partial Fisher-Yates
// shuffle driven by mt19937_64(seed), returned in population order. The
// draw depends only on the seed and the population, not on the standard
// library's distribution implementations.
std::vector<std::size_t> sample_without_replacement(std::span<const std::size_t> population,
                                                    std::size_t count, std::uint64_t seed);

}  // namespace tripmatch

#endif  // TRIPMATCH_RANDOM_HPP_
