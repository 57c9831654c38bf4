#include "smallnoise/approx.hpp"

#include <algorithm>
#include <cmath>

#include "smallnoise/ensemble.hpp"
#include "smallnoise/errors.hpp"

namespace smallnoise {

namespace {

constexpr std::size_t kBlock = 256;  // paths per reduction block (fixed, not tied to threads)

void check_ensemble(const EnsembleOptions& opts) {
  if (opts.n_paths < 2) throw invalid_input("ensemble: need at least 2 paths");
}

void check_gronwall_args(const std::vector<double>& t, const std::vector<double>& m, double C,
                         double alpha) {
  if (t.size() != m.size() || t.empty()) throw invalid_input("gronwall: size mismatch");
  if (!std::isfinite(C) || C < 0.0 || !std::isfinite(alpha) || alpha < 0.0) {
    throw invalid_input("gronwall: C and alpha must be nonnegative and finite");
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(m[i]) || m[i] < 0.0) {
      throw invalid_input("gronwall: curve must be finite and nonnegative");
    }
    if (i > 0 && t[i] <= t[i - 1]) throw invalid_input("gronwall: times must be ascending");
  }
}

}  // namespace

MCEstimate estimate_strong_error(const Problem& p, double eps, const TimeGrid& grid,
                                 double level, ErrorMode mode, const EnsembleOptions& opts) {
  validate_problem(p);
  check_ensemble(opts);

  const OdePath reference = solve_ode(p.drift, p.x0, grid);
  if (reference.diverged) {
    throw diverged_path(diverged_path::kNoPath, reference.last_step,
                        "deterministic reference path diverged");
  }

  std::vector<double> values(opts.n_paths);
  parallel_for_index(opts.n_paths, opts.threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_path_seed(opts.master_seed, i, opts.stream_tag);
    const BrownianIncrements incr = sample_increments(grid, p.noise_dim(), seed);
    const PathPair pair = integrate_pair(p, eps, incr, level, reference);
    if (pair.sde.diverged) {
      throw diverged_path(i, pair.sde.last_step, "sample path diverged");
    }
    values[i] = mode == ErrorMode::terminal ? pair.terminal_sq_diff
                                            : pair.sup_abs_diff * pair.sup_abs_diff;
  });
  return mean_std_error(values);
}

SweepResult epsilon_sweep(const Problem& p, std::vector<double> epsilons, const TimeGrid& grid,
                          double level, ErrorMode mode, const EnsembleOptions& opts,
                          bool common_random_numbers) {
  std::sort(epsilons.begin(), epsilons.end(), std::greater<double>());
  if (epsilons.size() < 3 ||
      std::adjacent_find(epsilons.begin(), epsilons.end()) != epsilons.end() ||
      !(epsilons.back() > 0.0) || !std::isfinite(epsilons.front())) {
    throw invalid_input("epsilon_sweep: need at least 3 distinct positive finite epsilons");
  }

  SweepResult result;
  result.epsilons = epsilons;
  std::vector<double> means;
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    EnsembleOptions per = opts;
    if (!common_random_numbers) per.stream_tag = opts.stream_tag + 1 + j;
    result.estimates.push_back(estimate_strong_error(p, epsilons[j], grid, level, mode, per));
    means.push_back(result.estimates.back().mean);
  }
  result.fit = fit_loglog_slope(epsilons, means);
  return result;
}

MomentBoundReport moment_bound_check(const Problem& p, double eps, double K,
                                     const TimeGrid& grid, double level,
                                     const EnsembleOptions& opts) {
  validate_problem(p);
  check_ensemble(opts);
  if (!std::isfinite(K) || K < 0.0) throw invalid_input("K must be nonnegative and finite");

  const std::size_t n_points = grid.n_steps + 1;
  const std::size_t n_blocks = block_count(opts.n_paths, kBlock);

  // Per-block partial sums of |X_k|^2 and |X_k|^4, reduced in block order so
  // the result does not depend on the worker count.
  std::vector<std::vector<double>> sum(n_blocks), sum_sq(n_blocks);
  parallel_for_index(n_blocks, opts.threads, [&](std::size_t blk) {
    std::vector<double> s(n_points, 0.0), s2(n_points, 0.0);
    const std::size_t lo = blk * kBlock;
    const std::size_t hi = std::min(lo + kBlock, opts.n_paths);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::uint64_t seed = derive_path_seed(opts.master_seed, i, opts.stream_tag);
      const BrownianIncrements incr = sample_increments(grid, p.noise_dim(), seed);
      const SdePath path = truncated_euler(p, eps, incr, level);
      if (path.diverged) throw diverged_path(i, path.last_step, "sample path diverged");
      for (std::size_t k = 0; k < n_points; ++k) {
        const double v = path.states.row(static_cast<Index>(k)).squaredNorm();
        s[k] += v;
        s2[k] += v * v;
      }
    }
    sum[blk] = std::move(s);
    sum_sq[blk] = std::move(s2);
  });

  MomentBoundReport report{MomentCurve{grid, {}, {}}, {}, false, 0.0};
  report.curve.value.resize(n_points);
  report.curve.std_error.resize(n_points);
  report.bound.resize(n_points);

  const double n = static_cast<double>(opts.n_paths);
  const double growth = 2.0 * K * K + eps * eps * K * K;
  const double front = 1.0 + p.x0.squaredNorm();
  bool ok = true;
  double max_ratio = 0.0;

  std::vector<double> block_vals(n_blocks);
  for (std::size_t k = 0; k < n_points; ++k) {
    for (std::size_t blk = 0; blk < n_blocks; ++blk) block_vals[blk] = sum[blk][k];
    const double mean_sq = pairwise_sum(block_vals) / n;
    for (std::size_t blk = 0; blk < n_blocks; ++blk) block_vals[blk] = sum_sq[blk][k];
    const double mean_fourth = pairwise_sum(block_vals) / n;
    const double var = std::max(0.0, (mean_fourth - mean_sq * mean_sq) * n / (n - 1.0));

    report.curve.value[k] = 1.0 + mean_sq;
    report.curve.std_error[k] = std::sqrt(var / n);
    report.bound[k] = front * std::exp(growth * grid.time(k));

    const double tested = report.curve.value[k] - 3.0 * report.curve.std_error[k];
    if (!(tested <= report.bound[k])) ok = false;
    max_ratio = std::max(max_ratio, report.curve.value[k] / report.bound[k]);
  }
  report.satisfied = ok;
  report.max_ratio = max_ratio;
  return report;
}

MCEstimate exceedance_probability(const Problem& p, double eps, double delta,
                                  const TimeGrid& grid, double level,
                                  const EnsembleOptions& opts) {
  validate_problem(p);
  check_ensemble(opts);
  if (!std::isfinite(delta) || delta <= 0.0) throw invalid_input("delta must be positive");

  const OdePath reference = solve_ode(p.drift, p.x0, grid);
  if (reference.diverged) {
    throw diverged_path(diverged_path::kNoPath, reference.last_step,
                        "deterministic reference path diverged");
  }

  std::vector<unsigned char> hit(opts.n_paths, 0);
  parallel_for_index(opts.n_paths, opts.threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_path_seed(opts.master_seed, i, opts.stream_tag);
    const BrownianIncrements incr = sample_increments(grid, p.noise_dim(), seed);
    const PathPair pair = integrate_pair(p, eps, incr, level, reference);
    if (pair.sde.diverged) {
      throw diverged_path(i, pair.sde.last_step, "sample path diverged");
    }
    hit[i] = pair.sup_abs_diff > delta ? 1 : 0;
  });

  std::size_t count = 0;
  for (unsigned char h : hit) count += h;
  const double n = static_cast<double>(opts.n_paths);
  const double prob = static_cast<double>(count) / n;
  return MCEstimate{prob, std::sqrt(prob * (1.0 - prob) / n), opts.n_paths};
}

bool gronwall_check(const std::vector<double>& t, const std::vector<double>& m, double C,
                    double alpha) {
  check_gronwall_args(t, m, C, alpha);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(m[i] <= C * std::exp(alpha * t[i]))) return false;
  }
  return true;
}

bool gronwall_premise_check(const std::vector<double>& t, const std::vector<double>& m, double C,
                            double alpha) {
  check_gronwall_args(t, m, C, alpha);
  double integral = 0.0;
  if (!(m[0] <= C)) return false;  // integral over [0, t_0] treated as empty
  for (std::size_t i = 1; i < t.size(); ++i) {
    integral += 0.5 * (t[i] - t[i - 1]) * (m[i] + m[i - 1]);
    if (!(m[i] <= C + alpha * integral)) return false;
  }
  return true;
}

}  // namespace smallnoise
