#include "smallnoise/integrate.hpp"

#include <cmath>

#include "smallnoise/errors.hpp"

namespace smallnoise {

namespace {

// One Euler kernel serves both schemes: the truncated integrator passes
// clipped coefficient fields through the identical arithmetic, which is what
// makes its output bit-identical to Euler-Maruyama wherever clipping is idle.
SdePath run_euler(const VectorField& drift, const MatrixField& diffusion, const Vector& x0,
                  double eps, const BrownianIncrements& increments,
                  const std::optional<double>& exit_level) {
  const TimeGrid& grid = increments.grid;
  const std::size_t n = grid.n_steps;
  const Index r = drift.dim;
  const double dt = grid.dt;
  const bool with_noise = eps > 0.0;

  SdePath path{grid, Matrix(static_cast<Index>(n) + 1, r), eps, false, 0, std::nullopt};

  auto track_exit = [&](const Vector& state, std::size_t k) {
    if (exit_level && !path.exit_time && state.lpNorm<Eigen::Infinity>() > *exit_level) {
      path.exit_time = grid.time(k);
    }
  };

  Vector x = x0;
  path.states.row(0) = x;
  track_exit(x, 0);

  for (std::size_t k = 0; k < n; ++k) {
    Vector next(r);
    if (with_noise) {
      next = x + dt * drift.eval(x) +
             eps * (diffusion.eval(x) * increments.dw.row(static_cast<Index>(k)).transpose());
    } else {
      next = x + dt * drift.eval(x);
    }
    if (!next.allFinite()) {
      path.diverged = true;
      path.states.conservativeResize(static_cast<Index>(k) + 1, r);
      return path;
    }
    x = std::move(next);
    path.states.row(static_cast<Index>(k) + 1) = x;
    path.last_step = k + 1;
    track_exit(x, k + 1);
  }
  return path;
}

void check_increments(const Problem& p, const BrownianIncrements& increments) {
  if (increments.dw.rows() != static_cast<Index>(increments.grid.n_steps)) {
    throw invalid_input("increments: row count must equal n_steps");
  }
  if (increments.dw.cols() != p.noise_dim()) {
    throw invalid_input("increments: column count must equal the noise dimension");
  }
}

void check_eps(double eps) {
  if (!std::isfinite(eps) || eps < 0.0) {
    throw invalid_input("eps must be nonnegative and finite");
  }
}

}  // namespace

OdePath solve_ode(const VectorField& b, const Vector& x0, const TimeGrid& grid) {
  if (!b.eval || b.dim <= 0) throw invalid_input("solve_ode: missing drift field");
  if (x0.size() != b.dim) throw invalid_input("solve_ode: x0 size must match the field dimension");
  if (!x0.allFinite()) throw invalid_input("solve_ode: x0 must be finite");

  const std::size_t n = grid.n_steps;
  const Index r = b.dim;
  const double dt = grid.dt;

  OdePath path{grid, Matrix(static_cast<Index>(n) + 1, r), false, 0};
  Vector x = x0;
  path.states.row(0) = x;

  for (std::size_t k = 0; k < n; ++k) {
    const Vector k1 = b.eval(x);
    const Vector k2 = b.eval(x + (0.5 * dt) * k1);
    const Vector k3 = b.eval(x + (0.5 * dt) * k2);
    const Vector k4 = b.eval(x + dt * k3);
    Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      path.diverged = true;
      path.states.conservativeResize(static_cast<Index>(k) + 1, r);
      return path;
    }
    x = std::move(next);
    path.states.row(static_cast<Index>(k) + 1) = x;
    path.last_step = k + 1;
  }
  return path;
}

SdePath euler_maruyama(const Problem& p, double eps, const BrownianIncrements& increments) {
  validate_problem(p);
  check_eps(eps);
  check_increments(p, increments);
  return run_euler(p.drift, p.diffusion, p.x0, eps, increments, std::nullopt);
}

SdePath truncated_euler(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level) {
  validate_problem(p);
  check_eps(eps);
  check_increments(p, increments);
  const Problem truncated = truncate_coefficients(p, level);
  return run_euler(truncated.drift, truncated.diffusion, truncated.x0, eps, increments, level);
}

PathPair integrate_pair(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level) {
  return integrate_pair(p, eps, increments, level,
                        solve_ode(p.drift, p.x0, increments.grid));
}

PathPair integrate_pair(const Problem& p, double eps, const BrownianIncrements& increments,
                        double level, const OdePath& reference) {
  if (reference.grid.n_steps != increments.grid.n_steps) {
    throw invalid_input("integrate_pair: reference grid does not match the increments");
  }

  PathPair pair{truncated_euler(p, eps, increments, level), reference, 0.0, 0.0};

  const std::size_t last =
      std::min(pair.sde.last_step, pair.ode.last_step);  // both full unless diverged
  double sup = 0.0;
  for (std::size_t k = 0; k <= last; ++k) {
    const double d =
        (pair.sde.states.row(static_cast<Index>(k)) - pair.ode.states.row(static_cast<Index>(k)))
            .norm();
    if (d > sup) sup = d;
  }
  pair.sup_abs_diff = sup;
  const Index end = static_cast<Index>(last);
  pair.terminal_sq_diff =
      (pair.sde.states.row(end) - pair.ode.states.row(end)).squaredNorm();
  return pair;
}

}  // namespace smallnoise
