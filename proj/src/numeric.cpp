#include "smallnoise/numeric.hpp"

#include <cmath>
#include <cstddef>

#include "smallnoise/errors.hpp"

namespace smallnoise {

double pairwise_sum(const double* data, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

double pairwise_sum(const std::vector<double>& data) {
  return pairwise_sum(data.data(), data.size());
}

MCEstimate mean_std_error(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw invalid_input("mean_std_error: need at least 2 values");
  const double mean = pairwise_sum(values) / static_cast<double>(n);

  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double ss = pairwise_sum(sq);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return MCEstimate{mean, sd / std::sqrt(static_cast<double>(n)), n};
}

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw invalid_input("fit_loglog_slope: size mismatch");

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const std::size_t m = lx.size();
  if (m < 2) throw invalid_input("fit_loglog_slope: need at least 2 usable points");

  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / static_cast<double>(m);
  const double my = sy / static_cast<double>(m);

  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 0.0) throw invalid_input("fit_loglog_slope: x values must be distinct");

  SlopeFit fit;
  fit.n_used = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;

  if (m > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

}  // namespace smallnoise
