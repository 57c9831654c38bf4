#pragma once

#include <cstddef>
#include <optional>

#include "smallnoise/model.hpp"
#include "smallnoise/randomness.hpp"
#include "smallnoise/types.hpp"

namespace smallnoise {

// Deterministic reference path, classical fourth-order Runge-Kutta.
// states has one row per retained grid point; if the solve blows up the path
// is cut at the last finite state and flagged, so states.rows() is
// last_step + 1 and states.row(k) is the state at grid.time(k).
struct OdePath {
  TimeGrid grid;
  Matrix states;
  bool diverged = false;
  std::size_t last_step = 0;

  Vector terminal() const { return states.row(static_cast<Index>(last_step)); }
};

struct SdePath {
  TimeGrid grid;
  Matrix states;
  double epsilon = 0.0;
  bool diverged = false;
  std::size_t last_step = 0;
  // First grid time at which the sup-norm of the state exceeds the truncation
  // level. Only the truncated integrator sets this.
  std::optional<double> exit_time;

  Vector terminal() const { return states.row(static_cast<Index>(last_step)); }
};

OdePath solve_ode(const VectorField& b, const Vector& x0, const TimeGrid& grid);

// Euler-Maruyama: X_{k+1} = X_k + b(X_k) dt + eps * sigma(X_k) dW_k.
// With eps == 0 the noise term is not evaluated at all, so the result is
// bit-identical to plain forward Euler. A non-finite state stops the
// integration; the returned path holds the finite prefix and is flagged.
SdePath euler_maruyama(const Problem& p, double eps, const BrownianIncrements& increments);

// Euler-Maruyama on truncate_coefficients(p, level), plus exit-time tracking.
// Shares the stepping kernel with euler_maruyama, so wherever the clipping is
// inactive the two produce bit-identical states. Bounded coefficients and
// finite increments keep every state finite: this scheme does not diverge.
SdePath truncated_euler(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level);

// Truncated SDE path and the eps = 0 reference on the same grid.
struct PathPair {
  SdePath sde;
  OdePath ode;
  double sup_abs_diff = 0.0;      // sup over grid points of |X_k - x_k| (Euclidean)
  double terminal_sq_diff = 0.0;  // |X_n - x_n|^2
};

PathPair integrate_pair(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level);
// Same, but reusing a precomputed reference path (it is the same for every
// sample path of an ensemble).
PathPair integrate_pair(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level, const OdePath& reference);

}  // namespace smallnoise
