#pragma once

#include <cstdint>
#include <random>

namespace stocbo {

// Independent stream families derived from one master seed. Observation (Y) draws and
// particle dynamics never share a family, so the randomness of the sample stays
// separated from the randomness of the algorithm.
enum class StreamDomain : std::uint32_t {
  Particles = 1,     // initial positions and Brownian increments
  Observations = 2,  // SAA draws of Y
  MiniBatch = 3,     // random consensus batches
  Subsample = 4,     // equal-size coupling of empirical measures
};

// Identifies one replication. `lane` separates roles inside a replication cell
// (finite-N run vs. reference run) without touching the run/sample indices.
struct RunSeed {
  std::uint64_t master = 0;
  std::uint64_t run = 0;
  std::uint64_t sample = 0;
  std::uint64_t lane = 0;

  friend bool operator==(const RunSeed&, const RunSeed&) = default;
};

using Engine = std::mt19937_64;

inline Engine make_engine(const RunSeed& seed, StreamDomain domain) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed.master), hi(seed.master), static_cast<std::uint32_t>(domain),
                    lo(seed.run),    hi(seed.run),    lo(seed.sample),
                    hi(seed.sample), lo(seed.lane),   hi(seed.lane)};
  return Engine(seq);
}

}  // namespace stocbo
