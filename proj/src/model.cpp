#include "smallnoise/model.hpp"

#include <cmath>
#include <limits>

#include "smallnoise/errors.hpp"
#include "smallnoise/randomness.hpp"

namespace smallnoise {

namespace {

void check_level(double level) {
  if (!std::isfinite(level) || level <= 0.0) {
    throw invalid_input("truncation level must be positive and finite");
  }
}

// Clip without validation; comparisons let NaN through untouched, which the
// integrators treat as divergence.
double clip_raw(double v, double level) {
  if (v > level) return level;
  if (v < -level) return -level;
  return v;
}

double eval_poly(const std::vector<double>& coeffs, double y) {
  double acc = 0.0;
  for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * y + coeffs[k];
  return acc;
}

Vector draw_box_point(SplitMix64& gen, Index dim, double halfwidth) {
  Vector y(dim);
  for (Index i = 0; i < dim; ++i) y[i] = gen.next_symmetric(halfwidth);
  return y;
}

void check_sample_args(double box_halfwidth, std::size_t n_samples) {
  if (!std::isfinite(box_halfwidth) || box_halfwidth <= 0.0) {
    throw invalid_input("box half-width must be positive and finite");
  }
  if (n_samples == 0) throw invalid_input("need at least one sample");
}

}  // namespace

void validate_problem(const Problem& p) {
  if (!p.drift.eval || !p.diffusion.eval) throw invalid_input("problem: missing coefficient field");
  if (p.drift.dim <= 0) throw invalid_input("problem: state dimension must be positive");
  if (p.diffusion.rows != p.drift.dim) {
    throw invalid_input("problem: diffusion row count must match the state dimension");
  }
  if (p.diffusion.cols <= 0) throw invalid_input("problem: noise dimension must be positive");
  if (p.x0.size() != p.drift.dim) throw invalid_input("problem: x0 size must match the state dimension");
  if (!p.x0.allFinite()) throw invalid_input("problem: x0 must be finite");
}

double clip_scalar(double v, double level) {
  check_level(level);
  if (std::isnan(v)) throw invalid_input("clip_scalar: value must not be NaN");
  return clip_raw(v, level);
}

Vector clip_vector(const Vector& x, double level) {
  check_level(level);
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i])) throw invalid_input("clip_vector: input must not contain NaN");
    out[i] = clip_raw(x[i], level);
  }
  return out;
}

Problem truncate_coefficients(const Problem& p, double level) {
  validate_problem(p);
  check_level(level);

  Problem out;
  out.drift.dim = p.drift.dim;
  out.drift.eval = [inner = p.drift.eval, level](const Vector& y) {
    Vector b = inner(y);
    for (Index i = 0; i < b.size(); ++i) b[i] = clip_raw(b[i], level);
    return b;
  };
  out.diffusion.rows = p.diffusion.rows;
  out.diffusion.cols = p.diffusion.cols;
  out.diffusion.eval = [inner = p.diffusion.eval, level](const Vector& y) {
    Matrix s = inner(y);
    for (Index j = 0; j < s.cols(); ++j) {
      for (Index i = 0; i < s.rows(); ++i) s(i, j) = clip_raw(s(i, j), level);
    }
    return s;
  };
  out.x0 = clip_vector(p.x0, level);
  return out;
}

ConditionReport check_dissipativity(const Problem& p, double K, double box_halfwidth,
                                    std::size_t n_samples, std::uint64_t seed) {
  validate_problem(p);
  check_sample_args(box_halfwidth, n_samples);
  if (!std::isfinite(K) || K < 0.0) throw invalid_input("K must be nonnegative and finite");

  ConditionReport report;
  report.condition = "dissipativity";
  report.witness_constant = K;
  report.sample = SampleSpec{box_halfwidth, n_samples, seed};
  report.min_margin = std::numeric_limits<double>::infinity();

  SplitMix64 gen(seed);
  const double K2 = K * K;
  Vector worst;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vector y = draw_box_point(gen, p.state_dim(), box_halfwidth);
    const Vector b = p.drift.eval(y);
    const Matrix sig = p.diffusion.eval(y);
    const double lhs = y.dot(b) + sig.squaredNorm();
    const double rhs = K2 * (1.0 + y.squaredNorm());
    const double margin = rhs - lhs;
    if (!std::isfinite(margin) || margin < 0.0) report.satisfied = false;
    if (margin < report.min_margin || (std::isnan(margin) && !std::isnan(report.min_margin))) {
      report.min_margin = margin;
      worst = y;
    }
  }
  // The witness is the worst sampled point, so re-evaluating the condition
  // there reproduces min_margin.
  if (!report.satisfied) report.violation_point = worst;
  return report;
}

ConditionReport check_difference_dissipativity(const Problem& p, double K, double box_halfwidth,
                                               std::size_t n_samples, std::uint64_t seed) {
  validate_problem(p);
  check_sample_args(box_halfwidth, n_samples);
  if (!std::isfinite(K) || K < 0.0) throw invalid_input("K must be nonnegative and finite");

  ConditionReport report;
  report.condition = "difference_dissipativity";
  report.witness_constant = K;
  report.sample = SampleSpec{box_halfwidth, n_samples, seed};
  report.min_margin = std::numeric_limits<double>::infinity();

  SplitMix64 gen(seed);
  const double K2 = K * K;
  Vector worst_y, worst_z;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Vector y = draw_box_point(gen, p.state_dim(), box_halfwidth);
    const Vector z = draw_box_point(gen, p.state_dim(), box_halfwidth);
    const Vector d = y - z;
    const double lhs = d.dot(p.drift.eval(y) - p.drift.eval(z));
    const double rhs = K2 * (1.0 + d.squaredNorm());
    const double margin = rhs - lhs;
    if (!std::isfinite(margin) || margin < 0.0) report.satisfied = false;
    if (margin < report.min_margin || (std::isnan(margin) && !std::isnan(report.min_margin))) {
      report.min_margin = margin;
      worst_y = y;
      worst_z = z;
    }
  }
  if (!report.satisfied) {
    report.violation_point = worst_y;
    report.violation_partner = worst_z;
  }
  return report;
}

double estimate_local_lipschitz(const Problem& p, double level, std::size_t n_pairs,
                                std::uint64_t seed) {
  validate_problem(p);
  check_level(level);
  if (n_pairs == 0) throw invalid_input("need at least one pair");

  // Unit-box draws scaled by the level: a fixed seed gives nested sample sets
  // as n_pairs grows and level-proportional points as the box grows.
  SplitMix64 gen(seed);
  const Index r = p.state_dim();
  double best = 0.0;
  for (std::size_t s = 0; s < n_pairs; ++s) {
    Vector y(r), z(r);
    for (Index i = 0; i < r; ++i) y[i] = level * gen.next_symmetric(1.0);
    for (Index i = 0; i < r; ++i) z[i] = level * gen.next_symmetric(1.0);
    const double dist = (y - z).norm();
    if (dist < 1e-12 * level) continue;
    const double num = (p.drift.eval(y) - p.drift.eval(z)).lpNorm<1>() +
                       (p.diffusion.eval(y) - p.diffusion.eval(z)).lpNorm<1>();
    const double quotient = num / dist;
    if (quotient > best) best = quotient;
  }
  return best;
}

Problem make_builtin_problem(const std::string& id, Index dim) {
  if (dim <= 0) throw invalid_input("builtin problem: dim must be positive");
  Vector x0 = (id == "const") ? Vector::Zero(dim) : Vector::Ones(dim);
  return make_builtin_problem(id, dim, x0);
}

Problem make_builtin_problem(const std::string& id, Index dim, const Vector& x0,
                             double drift_value, double sigma_value) {
  if (dim <= 0) throw invalid_input("builtin problem: dim must be positive");

  Problem p;
  p.drift.dim = dim;
  p.diffusion.rows = dim;
  p.diffusion.cols = dim;
  p.x0 = x0;

  if (id == "ou") {
    p.drift.eval = [](const Vector& y) { return Vector(-y); };
    p.diffusion.eval = [dim](const Vector&) { return Matrix(Matrix::Identity(dim, dim)); };
  } else if (id == "cubic") {
    p.drift.eval = [](const Vector& y) { return Vector(-y.array().cube()); };
    p.diffusion.eval = [dim](const Vector&) { return Matrix(Matrix::Identity(dim, dim)); };
  } else if (id == "const") {
    if (!std::isfinite(drift_value) || !std::isfinite(sigma_value)) {
      throw invalid_input("const problem: values must be finite");
    }
    p.drift.eval = [dim, drift_value](const Vector&) {
      return Vector(Vector::Constant(dim, drift_value));
    };
    p.diffusion.eval = [dim, sigma_value](const Vector&) {
      return Matrix(sigma_value * Matrix::Identity(dim, dim));
    };
  } else {
    throw invalid_input("unknown builtin problem id: " + id);
  }
  validate_problem(p);
  return p;
}

Problem make_polynomial_problem(const std::vector<std::vector<double>>& drift_coeffs,
                                const std::vector<std::vector<double>>& sigma_diag_coeffs,
                                const Vector& x0) {
  const Index r = static_cast<Index>(drift_coeffs.size());
  if (r <= 0) throw invalid_input("polynomial problem: need at least one drift component");
  if (static_cast<Index>(sigma_diag_coeffs.size()) != r) {
    throw invalid_input("polynomial problem: sigma component count must match drift");
  }
  for (const auto& block : {drift_coeffs, sigma_diag_coeffs}) {
    for (const auto& cs : block) {
      for (double c : cs) {
        if (!std::isfinite(c)) throw invalid_input("polynomial problem: coefficients must be finite");
      }
    }
  }

  // Trailing zero coefficients would turn overflowed states into NaN via
  // inf * 0 in Horner evaluation; drop them.
  auto strip = [](std::vector<std::vector<double>> block) {
    for (auto& cs : block) {
      while (!cs.empty() && cs.back() == 0.0) cs.pop_back();
    }
    return block;
  };

  Problem p;
  p.drift.dim = r;
  p.diffusion.rows = r;
  p.diffusion.cols = r;
  p.x0 = x0;
  p.drift.eval = [coeffs = strip(drift_coeffs), r](const Vector& y) {
    Vector b(r);
    for (Index i = 0; i < r; ++i) b[i] = eval_poly(coeffs[static_cast<std::size_t>(i)], y[i]);
    return b;
  };
  p.diffusion.eval = [coeffs = strip(sigma_diag_coeffs), r](const Vector& y) {
    Matrix s = Matrix::Zero(r, r);
    for (Index i = 0; i < r; ++i) s(i, i) = eval_poly(coeffs[static_cast<std::size_t>(i)], y[i]);
    return s;
  };
  validate_problem(p);
  return p;
}

}  // namespace smallnoise
