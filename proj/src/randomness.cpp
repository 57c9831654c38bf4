#include "smallnoise/randomness.hpp"

#include <cmath>
#include <numbers>

#include "smallnoise/errors.hpp"

namespace smallnoise {

namespace {

std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

TimeGrid::TimeGrid(double horizon_, std::size_t n_steps_) : horizon(horizon_), n_steps(n_steps_) {
  if (!std::isfinite(horizon) || horizon <= 0.0) {
    throw invalid_input("TimeGrid: horizon must be positive and finite");
  }
  if (n_steps == 0) {
    throw invalid_input("TimeGrid: n_steps must be at least 1");
  }
  dt = horizon / static_cast<double>(n_steps);
}

std::uint64_t derive_path_seed(std::uint64_t master_seed, std::uint64_t path_index,
                               std::uint64_t stream_tag) {
  std::uint64_t h = finalize(master_seed ^ 0x9E3779B97F4A7C15ULL);
  h = finalize(h + 0xBF58476D1CE4E5B9ULL * path_index);
  h = finalize(h + 0x94D049BB133111EBULL * stream_tag);
  return h;
}

void fill_standard_normals(SplitMix64& gen, double* out, std::size_t n) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = static_cast<double>((gen.next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(gen.next() >> 11) * 0x1.0p-53;        // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = two_pi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < n) out[i + 1] = radius * std::sin(angle);
  }
}

BrownianIncrements sample_increments(const TimeGrid& grid, Index noise_dim,
                                     std::uint64_t path_seed) {
  if (noise_dim <= 0) throw invalid_input("sample_increments: noise_dim must be positive");
  const std::size_t n = grid.n_steps;
  const std::size_t l = static_cast<std::size_t>(noise_dim);

  std::vector<double> buf(n * l);
  SplitMix64 gen(path_seed);
  fill_standard_normals(gen, buf.data(), buf.size());

  const double scale = std::sqrt(grid.dt);
  Matrix dw(static_cast<Index>(n), noise_dim);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < l; ++j) {
      dw(static_cast<Index>(k), static_cast<Index>(j)) = scale * buf[k * l + j];
    }
  }
  return BrownianIncrements{grid, std::move(dw), path_seed};
}

}  // namespace smallnoise
