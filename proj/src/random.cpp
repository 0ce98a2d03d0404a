#include "tripmatch/random.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace tripmatch {

namespace {

// Uniform integer in [0, bound) by rejection.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace

std::vector<std::size_t> sample_without_replacement(std::span<const std::size_t> population,
                                                    std::size_t count, std::uint64_t seed) {
  if (count > population.size()) {
    throw std::invalid_argument("cannot draw " + std::to_string(count) + " units from " +
                                std::to_string(population.size()));
  }
  std::vector<std::size_t> slots(population.size());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded(rng, slots.size() - i));
    std::swap(slots[i], slots[j]);
  }
  slots.resize(count);
  std::sort(slots.begin(), slots.end());
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t s : slots) out.push_back(population[s]);
  return out;
}

}  // namespace tripmatch
