#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "smallnoise/approx.hpp"
#include "smallnoise/model.hpp"
#include "smallnoise/types.hpp"

namespace smallnoise {

struct ScalarField {
  std::function<double(const Vector&)> eval;
  // Declared sup bound used for validity warnings; infinity means undeclared.
  double bound = std::numeric_limits<double>::infinity();
};

ScalarField make_const_field(double value);
ScalarField make_coordinate_field(Index component);
ScalarField make_squared_norm_field();
// f(x) = sum_k coeffs[k] * x[component]^k
ScalarField make_poly_field(const std::vector<double>& coeffs, Index component);

// Data of the parabolic problem dv/dt = L v + c v + g, v(0, x) = f(x).
struct CauchySpec {
  ScalarField c = make_const_field(0.0);
  ScalarField g = make_const_field(0.0);
  ScalarField f;
};

// Generator coefficients plus the uniform ellipticity constant k for
// a = sigma sigma^T: k^-2 |l|^2 <= <a l, l> <= k^2 |l|^2.
struct OperatorSpec {
  VectorField drift;
  MatrixField diffusion;
  double ellipticity_k = 1.0;
};

// Sampled ellipticity check over random (x, direction) pairs, x uniform in
// the sup-norm box, directions uniform on the sphere.
ConditionReport check_ellipticity(const OperatorSpec& op, double box_halfwidth,
                                  std::size_t n_samples, std::uint64_t seed);

struct PdeSolution {
  double t = 0.0;
  Vector x;
  double epsilon = 0.0;
  double value = 0.0;
  // Monte Carlo standard error when stochastic, quadrature error estimate
  // (from grid halving) otherwise.
  double error = 0.0;
  bool stochastic = false;
  std::size_t n_paths = 0;
  std::vector<std::string> warnings;
};

// v(t, x) = E[f(X_t) e^{I_t}] + E[int_0^t g(X_s) e^{I_s} ds], I_s = int_0^s c(X_u) du,
// over truncated-Euler paths started at x; both time integrals use
// left-endpoint sums, matching the order of the scheme. Declared bounds on c
// and f are spot-checked along sampled states and produce warnings.
PdeSolution solve_cauchy_mc(const Problem& p, const CauchySpec& spec, double eps, double t,
                            const Vector& x, double dt, double level,
                            const EnsembleOptions& opts);

// eps = 0 solution by the method of characteristics: RK4 along the flow of b,
// exponential weight and source integral by trapezoid rule. The reported
// error is |value(dt) - value(dt/2)| and the refined value is returned.
PdeSolution solve_cauchy_characteristics(const VectorField& b, const CauchySpec& spec, double t,
                                         const Vector& x, double dt);

// Pure transport special case c = 0, g = 0: expectation of f(X_t) for
// eps > 0, f evaluated along the flow for eps = 0.
PdeSolution solve_transport(const Problem& p, const ScalarField& f, double eps, double t,
                            const Vector& x, double dt, double level,
                            const EnsembleOptions& opts);

struct PdeSweepPoint {
  double epsilon = 0.0;
  PdeSolution solution;
  double gap_to_v0 = 0.0;  // |v_eps - v_0|
};

struct PdeSweepResult {
  PdeSolution v0;  // characteristics solution
  std::vector<PdeSweepPoint> points;  // epsilon descending
  SlopeFit gap_fit;                   // log gap vs log eps
  // Successive gaps shrink by more than twice the combined standard error,
  // or both are statistically indistinguishable from zero.
  bool strictly_decreasing = false;
};

// Small-noise convergence study of v_eps against the characteristics
// solution. Monte Carlo runs share per-path seeds across epsilons when
// common_random_numbers is set.
PdeSweepResult pde_epsilon_sweep(const Problem& p, const CauchySpec& spec,
                                 std::vector<double> epsilons, double t, const Vector& x,
                                 double dt, double level, const EnsembleOptions& opts,
                                 bool common_random_numbers = true);

}  // namespace smallnoise
