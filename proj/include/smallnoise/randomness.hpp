#pragma once

#include <cstddef>
#include <cstdint>

#include "smallnoise/types.hpp"

namespace smallnoise {

// Uniform grid 0 = t_0 < t_1 < ... < t_n = horizon with dt = horizon / n_steps.
struct TimeGrid {
  TimeGrid(double horizon_, std::size_t n_steps_);

  double time(std::size_t k) const { return dt * static_cast<double>(k); }

  double horizon;
  std::size_t n_steps;
  double dt;
};

// SplitMix64: 64-bit golden-gamma counter followed by the finalizer below.
// Used as the single generator for everything stochastic in this library so
// streams are reproducible bit-for-bit given the same seed.
struct SplitMix64 {
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1): top 53 bits scaled by 2^-53.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform double in [-halfwidth, halfwidth].
  double next_symmetric(double halfwidth) { return halfwidth * (2.0 * next_unit() - 1.0); }

  std::uint64_t state;
};

// Counter-based per-path seed. Three finalizer rounds, each absorbing one
// input; the maps are bijections of u64, so for a fixed (master, tag) the
// assignment index -> seed is collision free. The mixing constants are the
// SplitMix64 finalizer multipliers. This derivation is part of the output
// format contract: changing it changes every sampled path.
std::uint64_t derive_path_seed(std::uint64_t master_seed, std::uint64_t path_index,
                               std::uint64_t stream_tag);

// Brownian increments for one path: dw(k, j) = increment of component j over
// [t_k, t_{k+1}], so dw has n_steps rows and noise_dim columns.
struct BrownianIncrements {
  TimeGrid grid;
  Matrix dw;
  std::uint64_t path_seed;
};

// Standard normals via Box-Muller on SplitMix64 uniforms:
//   u1 = (next() >> 11 + 1) * 2^-53  in (0, 1]
//   u2 = (next() >> 11)     * 2^-53  in [0, 1)
//   z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
// Slots are filled in step-major order (all components of step 0, then step
// 1, ...), two slots per draw; for an odd slot count the final z1 is unused.
// Increments are the normals scaled by sqrt(dt).
BrownianIncrements sample_increments(const TimeGrid& grid, Index noise_dim,
                                     std::uint64_t path_seed);

// Fills out[0..n) with standard normals as documented above.
void fill_standard_normals(SplitMix64& gen, double* out, std::size_t n);

}  // namespace smallnoise
