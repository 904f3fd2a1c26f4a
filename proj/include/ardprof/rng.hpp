#pragma once

#include <cstdint>
#include <random>

namespace ardprof {

using Rng = std::mt19937_64;

// Independent stream for task `index` under a master seed. Used for chains,
// replicates and bootstrap workers so results never depend on scheduling.
inline Rng make_stream(std::uint64_t seed, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x41524450u};
  return Rng(seq);
}

}  // namespace ardprof
