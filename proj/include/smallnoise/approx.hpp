#pragma once

#include <cstdint>
#include <vector>

#include "smallnoise/integrate.hpp"
#include "smallnoise/model.hpp"
#include "smallnoise/numeric.hpp"
#include "smallnoise/randomness.hpp"

namespace smallnoise {

enum class ErrorMode { terminal, sup };

struct EnsembleOptions {
  std::size_t n_paths = 0;
  std::uint64_t master_seed = 0;
  int threads = 1;             // <= 0: hardware count
  std::uint64_t stream_tag = 0;
};

// Mean of |X_T - x_T|^2 (terminal mode) or of sup_k |X_k - x_k|^2 (sup mode)
// over n_paths truncated-Euler paths against the shared deterministic
// reference. Path i uses derive_path_seed(master_seed, i, stream_tag), so the
// ensemble is reproducible and independent of the worker count. A diverged
// path aborts the run with a diverged_path naming the path index.
MCEstimate estimate_strong_error(const Problem& p, double eps, const TimeGrid& grid,
                                 double level, ErrorMode mode, const EnsembleOptions& opts);

struct SweepResult {
  std::vector<double> epsilons;       // descending
  std::vector<MCEstimate> estimates;  // aligned with epsilons
  SlopeFit fit;                       // log mean error vs log eps
};

// Strong error across noise amplitudes. With common_random_numbers (the
// default) every epsilon reuses the same per-path seeds, which couples the
// estimates and stabilises the fitted slope; otherwise each epsilon gets its
// own stream tag. Requires at least three distinct positive epsilons.
SweepResult epsilon_sweep(const Problem& p, std::vector<double> epsilons, const TimeGrid& grid,
                          double level, ErrorMode mode, const EnsembleOptions& opts,
                          bool common_random_numbers = true);

// value[k] estimates 1 + E|X_{t_k}|^2 on truncated-Euler paths.
struct MomentCurve {
  TimeGrid grid;
  std::vector<double> value;
  std::vector<double> std_error;
};

struct MomentBoundReport {
  MomentCurve curve;
  std::vector<double> bound;  // (1 + |x0|^2) exp((2 K^2 + eps^2 K^2) t_k)
  bool satisfied = false;     // value - 3 std_error <= bound at every grid point
  double max_ratio = 0.0;     // max over k of value / bound
};

MomentBoundReport moment_bound_check(const Problem& p, double eps, double K,
                                     const TimeGrid& grid, double level,
                                     const EnsembleOptions& opts);

// P(sup_k |X_k - x_k| > delta) with binomial standard error.
MCEstimate exceedance_probability(const Problem& p, double eps, double delta,
                                  const TimeGrid& grid, double level,
                                  const EnsembleOptions& opts);

// Conclusion form: m(t_k) <= C exp(alpha t_k) at every sample (plain <=, so
// exact equality passes). Inputs must be finite, m nonnegative, t ascending.
bool gronwall_check(const std::vector<double>& t, const std::vector<double>& m, double C,
                    double alpha);

// Premise form: m(t_k) <= C + alpha * integral_0^{t_k} m, trapezoid rule.
bool gronwall_premise_check(const std::vector<double>& t, const std::vector<double>& m, double C,
                            double alpha);

}  // namespace smallnoise
