#pragma once

// Seeded draws that are identical across standard library implementations
// (std::uniform_int_distribution and std::shuffle are not).

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace sqlgrade {

/// Uniform integer in [0, n), n >= 1, by rejection sampling.
inline std::uint64_t uniform_index(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = gen();
  while (x >= limit) x = gen();
  return x % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace sqlgrade
