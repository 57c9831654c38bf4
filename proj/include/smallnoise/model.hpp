#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "smallnoise/types.hpp"

namespace smallnoise {

struct VectorField {
  std::function<Vector(const Vector&)> eval;
  Index dim = 0;  // input and output dimension
};

struct MatrixField {
  std::function<Matrix(const Vector&)> eval;
  Index rows = 0;  // state dimension
  Index cols = 0;  // noise dimension
};

// dX = b(X) dt + eps * sigma(X) dW started at x0.
struct Problem {
  VectorField drift;
  MatrixField diffusion;
  Vector x0;

  Index state_dim() const { return drift.dim; }
  Index noise_dim() const { return diffusion.cols; }
};

// Throws invalid_input on inconsistent dimensions or non-finite x0.
void validate_problem(const Problem& p);

// Component-wise clip to [-level, level]. level must be positive and finite;
// x must be finite.
double clip_scalar(double v, double level);
Vector clip_vector(const Vector& x, double level);

// Truncation at level N: clip the initial point and clip every component of
// b(y) and sigma(y) to [-N, N]. The state argument itself is never modified,
// only coefficient values, so trajectories evolve freely but with bounded
// drift and diffusion. Where nothing clips this is the identity and the
// returned fields evaluate bit-for-bit equal to the originals.
Problem truncate_coefficients(const Problem& p, double level);

struct SampleSpec {
  double box_halfwidth = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

// Result of a sampled coefficient-condition check. Failures are reproducible:
// re-evaluating the condition at violation_point (and violation_partner for
// pairwise conditions) shows the reported margin.
struct ConditionReport {
  std::string condition;
  bool satisfied = true;
  double witness_constant = 0.0;  // the K tested
  SampleSpec sample;
  std::optional<Vector> violation_point;
  std::optional<Vector> violation_partner;
  double min_margin = 0.0;  // min over samples of rhs - lhs; negative = violated
};

// <y, b(y)> + sum_ij sigma_ij(y)^2 <= K^2 (1 + |y|^2) on points sampled
// uniformly from the sup-norm box of the given half-width.
ConditionReport check_dissipativity(const Problem& p, double K, double box_halfwidth,
                                    std::size_t n_samples, std::uint64_t seed);

// <y - z, b(y) - b(z)> <= K^2 (1 + |y - z|^2) on sampled pairs.
ConditionReport check_difference_dissipativity(const Problem& p, double K, double box_halfwidth,
                                               std::size_t n_samples, std::uint64_t seed);

// Max over sampled pairs in the sup-norm box of half-width `level` of
//   (sum_i |b_i(y) - b_i(z)| + sum_ij |sigma_ij(y) - sigma_ij(z)|) / |y - z|.
// Pairs are drawn as level-scaled unit-box samples from one stream, so for a
// fixed seed the estimate is monotone in n_pairs and, for fields that scale
// monotonically, in level.
double estimate_local_lipschitz(const Problem& p, double level, std::size_t n_pairs,
                                std::uint64_t seed);

// Built-in problems:
//   "ou"    b(y) = -y,              sigma = I, x0 = ones
//   "cubic" b(y) = -y^3 (per comp), sigma = I, x0 = ones
//   "const" b(y) = drift_value,     sigma = sigma_value * I, x0 = zeros
// Unknown ids throw invalid_input.
Problem make_builtin_problem(const std::string& id, Index dim);
Problem make_builtin_problem(const std::string& id, Index dim, const Vector& x0,
                             double drift_value = 0.0, double sigma_value = 1.0);

// Component-wise scalar polynomials: b_i(y) = poly(drift_coeffs[i], y_i) and
// diagonal sigma_ii(y) = poly(sigma_diag_coeffs[i], y_i); coefficient lists
// are in ascending powers. Noise dimension equals the state dimension.
Problem make_polynomial_problem(const std::vector<std::vector<double>>& drift_coeffs,
                                const std::vector<std::vector<double>>& sigma_diag_coeffs,
                                const Vector& x0);

}  // namespace smallnoise
