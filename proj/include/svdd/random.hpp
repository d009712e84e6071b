#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace svdd {

using Rng = std::mt19937_64;

// Independent stream for one cell of a work matrix, e.g. (seed, n-index, s-index).
inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32),
                                   static_cast<std::uint32_t>(stream.size())};
  for (auto v : stream) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Seed for a nested consumer that builds its own streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  auto rng = make_rng(seed, stream);
  return rng();
}

}  // namespace svdd
