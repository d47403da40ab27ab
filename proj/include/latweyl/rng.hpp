// Counter-based uniform draws: value depends only on (seed, stream, counter),
// so parallel loops reproduce serial results bit for bit.
#pragma once

#include <cstdint>

namespace latweyl {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in [0,1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t h = mix64(mix64(seed ^ mix64(stream)) + counter);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace latweyl
