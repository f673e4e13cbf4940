#pragma once

#include <cstdint>
#include <random>

namespace covtail {

using Rng = std::mt19937_64;

/// Derive the seed for sub-stream `stream` of a master seed.
///
/// Uses the splitmix64 finalizer as an avalanche mixer, so per-trial
/// streams are decorrelated and independent of scheduling order.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(mix_seed(master, stream));
}

}  // namespace covtail
