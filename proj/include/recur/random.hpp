#pragma once

#include <cstdint>
#include <random>

namespace recur {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; mixes (seed, stream, counter) into one well-spread seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

}  // namespace recur
