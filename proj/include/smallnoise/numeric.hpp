#pragma once

#include <cstddef>
#include <vector>

namespace smallnoise {

// Monte Carlo estimate: mean, standard error of the mean, sample count.
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

// Fixed-order pairwise (cascade) summation. Deterministic for a given input
// order regardless of how the values were produced, and more accurate than a
// running sum on large ensembles.
double pairwise_sum(const double* data, std::size_t n);
double pairwise_sum(const std::vector<double>& data);

// mean = pairwise mean, std_error = sample standard deviation / sqrt(n).
MCEstimate mean_std_error(const std::vector<double>& values);

// Least-squares line through (log x_i, log y_i). Points with y <= 0 or
// non-finite are dropped; n_used reports how many survived.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  std::size_t n_used = 0;
};

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace smallnoise
