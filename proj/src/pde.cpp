#include "smallnoise/pde.hpp"

#include <algorithm>
#include <cmath>

#include "smallnoise/ensemble.hpp"
#include "smallnoise/errors.hpp"
#include "smallnoise/integrate.hpp"

namespace smallnoise {

namespace {

constexpr std::size_t kBlock = 256;

std::size_t steps_for(double t, double dt) {
  if (!std::isfinite(t) || t <= 0.0 || !std::isfinite(dt) || dt <= 0.0) {
    throw invalid_input("query time and dt must be positive and finite");
  }
  const double ratio = t / dt;
  const double rounded = std::nearbyint(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw invalid_input("t must be an integer multiple of dt");
  }
  if (rounded > 1e8) throw invalid_input("too many time steps");
  return static_cast<std::size_t>(rounded);
}

void check_spec(const CauchySpec& spec) {
  if (!spec.f.eval || !spec.c.eval || !spec.g.eval) {
    throw invalid_input("Cauchy data must provide c, g and f");
  }
}

// f(x_t) e^{C_t} + int_0^t g(x_s) e^{C_s} ds along one deterministic path,
// both integrals by trapezoid rule.
double characteristics_value(const VectorField& b, const CauchySpec& spec, const Vector& x,
                             const TimeGrid& grid) {
  const OdePath path = solve_ode(b, x, grid);
  if (path.diverged) {
    throw diverged_path(diverged_path::kNoPath, path.last_step, "characteristic path diverged");
  }
  const std::size_t n = grid.n_steps;
  const double dt = grid.dt;

  double c_prev = spec.c.eval(path.states.row(0));
  double g_prev = spec.g.eval(path.states.row(0));
  double weight = 0.0;  // C_k = int_0^{t_k} c(x_s) ds
  double source = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const Vector state = path.states.row(static_cast<Index>(k));
    const double c_here = spec.c.eval(state);
    const double g_here = spec.g.eval(state);
    const double weight_next = weight + 0.5 * dt * (c_prev + c_here);
    source += 0.5 * dt * (g_prev * std::exp(weight) + g_here * std::exp(weight_next));
    weight = weight_next;
    c_prev = c_here;
    g_prev = g_here;
  }
  return spec.f.eval(path.states.row(static_cast<Index>(n))) * std::exp(weight) + source;
}

}  // namespace

ScalarField make_const_field(double value) {
  if (!std::isfinite(value)) throw invalid_input("const field: value must be finite");
  return ScalarField{[value](const Vector&) { return value; }, std::abs(value)};
}

ScalarField make_coordinate_field(Index component) {
  if (component < 0) throw invalid_input("coordinate field: component must be nonnegative");
  return ScalarField{[component](const Vector& x) { return x[component]; },
                     std::numeric_limits<double>::infinity()};
}

ScalarField make_squared_norm_field() {
  return ScalarField{[](const Vector& x) { return x.squaredNorm(); },
                     std::numeric_limits<double>::infinity()};
}

ScalarField make_poly_field(const std::vector<double>& coeffs, Index component) {
  if (component < 0) throw invalid_input("poly field: component must be nonnegative");
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw invalid_input("poly field: coefficients must be finite");
  }
  std::vector<double> cs = coeffs;
  while (!cs.empty() && cs.back() == 0.0) cs.pop_back();
  return ScalarField{[cs, component](const Vector& x) {
                       double acc = 0.0;
                       for (std::size_t k = cs.size(); k-- > 0;) acc = acc * x[component] + cs[k];
                       return acc;
                     },
                     std::numeric_limits<double>::infinity()};
}

ConditionReport check_ellipticity(const OperatorSpec& op, double box_halfwidth,
                                  std::size_t n_samples, std::uint64_t seed) {
  if (!op.diffusion.eval) throw invalid_input("ellipticity: missing diffusion field");
  if (!std::isfinite(op.ellipticity_k) || op.ellipticity_k < 1.0) {
    throw invalid_input("ellipticity: k must be >= 1 and finite");
  }
  if (!std::isfinite(box_halfwidth) || box_halfwidth <= 0.0 || n_samples == 0) {
    throw invalid_input("ellipticity: bad sample spec");
  }

  ConditionReport report;
  report.condition = "ellipticity";
  report.witness_constant = op.ellipticity_k;
  report.sample = SampleSpec{box_halfwidth, n_samples, seed};
  report.min_margin = std::numeric_limits<double>::infinity();

  const double k2 = op.ellipticity_k * op.ellipticity_k;
  const Index r = op.diffusion.rows;
  SplitMix64 gen(seed);
  std::vector<double> normals(static_cast<std::size_t>(r));

  for (std::size_t s = 0; s < n_samples; ++s) {
    Vector x(r);
    for (Index i = 0; i < r; ++i) x[i] = gen.next_symmetric(box_halfwidth);
    Vector dir(r);
    fill_standard_normals(gen, normals.data(), normals.size());
    for (Index i = 0; i < r; ++i) dir[i] = normals[static_cast<std::size_t>(i)];
    const double len = dir.norm();
    if (len < 1e-12) continue;
    dir /= len;

    const Matrix sig = op.diffusion.eval(x);
    const double quad = (sig.transpose() * dir).squaredNorm();  // <sigma sigma^T dir, dir>
    const double lower = 1.0 / k2;
    const double margin = std::min(quad - lower, k2 - quad);
    if (!std::isfinite(margin) || margin < 0.0) {
      report.satisfied = false;
      if (!report.violation_point) {
        report.violation_point = x;
        report.violation_partner = dir;
      }
    }
    if (margin < report.min_margin || std::isnan(margin)) report.min_margin = margin;
  }
  return report;
}

PdeSolution solve_cauchy_mc(const Problem& p, const CauchySpec& spec, double eps, double t,
                            const Vector& x, double dt, double level,
                            const EnsembleOptions& opts) {
  validate_problem(p);
  check_spec(spec);
  if (opts.n_paths < 2) throw invalid_input("ensemble: need at least 2 paths");
  if (x.size() != p.state_dim()) throw invalid_input("query point dimension mismatch");

  const TimeGrid grid(t, steps_for(t, dt));
  Problem q = p;
  q.x0 = x;

  const std::size_t n = grid.n_steps;
  const std::size_t n_blocks = block_count(opts.n_paths, kBlock);
  std::vector<std::vector<double>> block_values(n_blocks);
  std::vector<std::size_t> c_bound_hits(n_blocks, 0), g_bound_hits(n_blocks, 0),
      f_bound_hits(n_blocks, 0);

  parallel_for_index(n_blocks, opts.threads, [&](std::size_t blk) {
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = std::min(lo + kBlock, opts.n_paths);
    std::vector<double> vals;
    vals.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t seed = derive_path_seed(opts.master_seed, i, opts.stream_tag);
      const BrownianIncrements incr = sample_increments(grid, q.noise_dim(), seed);
      const SdePath path = truncated_euler(q, eps, incr, level);
      if (path.diverged) throw diverged_path(i, path.last_step, "sample path diverged");

      // Left-endpoint sums: I_k = dt * sum_{j<k} c(X_j), source accumulated
      // with the weight available before the step, matching the scheme order.
      double weight = 0.0;
      double source = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const Vector state = path.states.row(static_cast<Index>(k));
        const double c_here = spec.c.eval(state);
        const double g_here = spec.g.eval(state);
        if (std::abs(c_here) > spec.c.bound) ++c_bound_hits[blk];
        if (std::abs(g_here) > spec.g.bound) ++g_bound_hits[blk];
        source += g_here * std::exp(weight);
        weight += c_here * grid.dt;
      }
      const Vector terminal = path.states.row(static_cast<Index>(n));
      const double f_terminal = spec.f.eval(terminal);
      if (std::abs(f_terminal) > spec.f.bound) ++f_bound_hits[blk];
      vals.push_back(f_terminal * std::exp(weight) + grid.dt * source);
    }
    block_values[blk] = std::move(vals);
  });

  std::vector<double> values;
  values.reserve(opts.n_paths);
  for (auto& blk : block_values) values.insert(values.end(), blk.begin(), blk.end());
  const MCEstimate est = mean_std_error(values);

  PdeSolution sol;
  sol.t = t;
  sol.x = x;
  sol.epsilon = eps;
  sol.value = est.mean;
  sol.error = est.std_error;
  sol.stochastic = true;
  sol.n_paths = opts.n_paths;

  std::size_t c_hits = 0, g_hits = 0, f_hits = 0;
  for (std::size_t blk = 0; blk < n_blocks; ++blk) {
    c_hits += c_bound_hits[blk];
    g_hits += g_bound_hits[blk];
    f_hits += f_bound_hits[blk];
  }
  if (c_hits > 0) {
    sol.warnings.push_back("declared bound on c exceeded at " + std::to_string(c_hits) +
                           " sampled states");
  }
  if (g_hits > 0) {
    sol.warnings.push_back("declared bound on g exceeded at " + std::to_string(g_hits) +
                           " sampled states");
  }
  if (f_hits > 0) {
    sol.warnings.push_back("declared bound on f exceeded at " + std::to_string(f_hits) +
                           " sampled terminal states");
  }
  return sol;
}

PdeSolution solve_cauchy_characteristics(const VectorField& b, const CauchySpec& spec, double t,
                                         const Vector& x, double dt) {
  check_spec(spec);
  if (x.size() != b.dim) throw invalid_input("query point dimension mismatch");

  const std::size_t n = steps_for(t, dt);
  const double coarse = characteristics_value(b, spec, x, TimeGrid(t, n));
  const double fine = characteristics_value(b, spec, x, TimeGrid(t, 2 * n));

  PdeSolution sol;
  sol.t = t;
  sol.x = x;
  sol.epsilon = 0.0;
  sol.value = fine;
  sol.error = std::abs(fine - coarse);  // grid-halving quadrature error estimate
  sol.stochastic = false;
  sol.n_paths = 0;
  return sol;
}

PdeSolution solve_transport(const Problem& p, const ScalarField& f, double eps, double t,
                            const Vector& x, double dt, double level,
                            const EnsembleOptions& opts) {
  CauchySpec spec;
  spec.f = f;
  if (eps == 0.0) return solve_cauchy_characteristics(p.drift, spec, t, x, dt);
  return solve_cauchy_mc(p, spec, eps, t, x, dt, level, opts);
}

PdeSweepResult pde_epsilon_sweep(const Problem& p, const CauchySpec& spec,
                                 std::vector<double> epsilons, double t, const Vector& x,
                                 double dt, double level, const EnsembleOptions& opts,
                                 bool common_random_numbers) {
  std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());
  if (epsilons.empty() || !(epsilons.back() > 0.0) || !std::isfinite(epsilons.front()) ||
      std::adjacent_find(epsilons.begin(), epsilons.end()) != epsilons.end()) {
    throw invalid_input("pde_epsilon_sweep: epsilons must be distinct, positive and finite");
  }

  PdeSweepResult result;
  result.v0 = solve_cauchy_characteristics(p.drift, spec, t, x, dt);

  std::vector<double> gaps;
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    EnsembleOptions per = opts;
    if (!common_random_numbers) per.stream_tag = opts.stream_tag + 1 + j;
    PdeSweepPoint point;
    point.epsilon = epsilons[j];
    point.solution = solve_cauchy_mc(p, spec, epsilons[j], t, x, dt, level, per);
    point.gap_to_v0 = std::abs(point.solution.value - result.v0.value);
    gaps.push_back(point.gap_to_v0);
    result.points.push_back(std::move(point));
  }

  if (epsilons.size() >= 3) result.gap_fit = fit_loglog_slope(epsilons, gaps);

  bool decreasing = epsilons.size() >= 2;
  for (std::size_t j = 0; j + 1 < result.points.size(); ++j) {
    const auto& big = result.points[j];
    const auto& small = result.points[j + 1];
    const double comb =
        std::hypot(big.solution.error, small.solution.error);
    const bool drop = big.gap_to_v0 - small.gap_to_v0 > 2.0 * comb;
    const bool both_zero = big.gap_to_v0 <= 2.0 * big.solution.error &&
                           small.gap_to_v0 <= 2.0 * small.solution.error;
    if (!drop && !both_zero) decreasing = false;
  }
  result.strictly_decreasing = decreasing;
  return result;
}

}  // namespace smallnoise
