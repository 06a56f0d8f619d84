#pragma once

#include <cstdint>
#include <random>

namespace cprand {

// Stream ids for deriving independent generators from one user-facing seed.
// Keeping streams separate means e.g. the sampling sequence does not shift
// when an option toggles how many mixing signs are drawn.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kSamplingStream = 2;
inline constexpr std::uint64_t kFitStream = 3;
inline constexpr std::uint64_t kMixingStream = 4;
inline constexpr std::uint64_t kSynthStream = 5;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic engine for (seed, stream). Identical inputs give identical
// sequences on every run of the same build.
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xA0761D6478BD642Full * (stream + 1));
  detail::splitmix64(state);
  return std::mt19937_64(detail::splitmix64(state));
}

}  // namespace cprand
