#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace svyqif {

using Rng = std::mt19937_64;

/// Independent stream for (seed, keys...). Used so that replicate and
/// bootstrap draws do not depend on scheduling order.
inline Rng makeStream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t k : keys) {
    words.push_back(static_cast<std::uint32_t>(k));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace svyqif
