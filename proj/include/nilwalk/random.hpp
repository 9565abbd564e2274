#pragma once

#include <cstdint>
#include <random>

namespace nilwalk {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` of a master seed. Streams are a
/// pure function of (seed, stream), so results do not depend on scheduling.
inline Rng stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6e696c77u};
  return Rng(seq);
}

}  // namespace nilwalk
