#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "smallnoise/errors.hpp"
#include "smallnoise/pde.hpp"

using namespace smallnoise;

namespace {

CauchySpec transport_of(ScalarField f) {
  CauchySpec spec;
  spec.f = std::move(f);
  return spec;
}

}  // namespace

TEST_CASE("characteristics reproduce the OU transport solution") {
  const Problem ou = make_builtin_problem("ou", 1);
  // v(t, x) = f(x e^{-t}) for pure transport along the flow of b = -y
  const PdeSolution sol = solve_cauchy_characteristics(
      ou.drift, transport_of(make_squared_norm_field()), 1.0, Vector::Ones(1), 0.01);
  CHECK(std::abs(sol.value - std::exp(-2.0)) < 1e-9);
  CHECK(sol.error < 1e-8);
  CHECK(!sol.stochastic);
  CHECK(sol.epsilon == 0.0);
}

TEST_CASE("characteristics integrate the potential and source terms") {
  // b = 0 keeps the state at x, so with c and g constant the solution is
  // v(t) = f e^{ct} + g (e^{ct} - 1) / c, all quadratures exact for constants
  const Problem still = make_builtin_problem("const", 1, Vector::Ones(1), 0.0, 1.0);
  CauchySpec spec;
  spec.c = make_const_field(0.5);
  spec.g = make_const_field(2.0);
  spec.f = make_const_field(3.0);
  const PdeSolution sol =
      solve_cauchy_characteristics(still.drift, spec, 2.0, Vector::Ones(1), 0.01);
  const double expected = 3.0 * std::exp(1.0) + 2.0 * (std::exp(1.0) - 1.0) / 0.5;
  CHECK(std::abs(sol.value - expected) < 1e-5);
  CHECK(std::abs(sol.value - expected) < 10.0 * sol.error + 1e-9);
}

TEST_CASE("monte carlo value of constant data is exact") {
  const Problem ou = make_builtin_problem("ou", 1);
  const EnsembleOptions opts{200, 5, 1, 0};

  // f == 1, c == 0, g == 0: every path contributes exactly 1
  const PdeSolution one = solve_cauchy_mc(ou, transport_of(make_const_field(1.0)), 0.3, 1.0,
                                          Vector::Ones(1), 0.01, 50.0, opts);
  CHECK(one.value == 1.0);
  CHECK(one.error == 0.0);
  CHECK(one.stochastic);
  CHECK(one.n_paths == 200);

  // c == 0.5, f == 1: weight is deterministic, value = e^{0.5 t}
  CauchySpec rate;
  rate.c = make_const_field(0.5);
  rate.f = make_const_field(1.0);
  const PdeSolution growth =
      solve_cauchy_mc(ou, rate, 0.3, 1.0, Vector::Ones(1), 0.01, 50.0, opts);
  CHECK(growth.value == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
  // identical path values, so only pairwise-summation rounding remains
  CHECK(growth.error < 1e-15);

  // pure source g == 1, f == 0: left-endpoint sum gives exactly t
  CauchySpec source;
  source.g = make_const_field(1.0);
  source.f = make_const_field(0.0);
  const PdeSolution accum =
      solve_cauchy_mc(ou, source, 0.3, 1.0, Vector::Ones(1), 0.01, 50.0, opts);
  CHECK(accum.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(accum.error < 1e-15);
}

TEST_CASE("monte carlo matches the discrete OU second moment") {
  // X_{k+1} = (1-dt) X_k + eps dW: terminal second moment is exactly
  // (1-dt)^{2n} + eps^2 dt sum_k (1-dt)^{2k}
  const Problem ou = make_builtin_problem("ou", 1);
  const double eps = 0.2;
  const double dt = 0.01;
  const std::size_t n = 100;
  double mean = 1.0;
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    var = (1.0 - dt) * (1.0 - dt) * var + eps * eps * dt;
    mean *= 1.0 - dt;
  }
  const double exact = mean * mean + var;

  const PdeSolution sol = solve_cauchy_mc(ou, transport_of(make_squared_norm_field()), eps,
                                          1.0, Vector::Ones(1), dt, 50.0, {20000, 29, 1, 0});
  CHECK(std::abs(sol.value - exact) < 4.0 * sol.error);
}

TEST_CASE("monte carlo value is linear in the data") {
  const Problem ou = make_builtin_problem("ou", 1);
  const EnsembleOptions opts{500, 9, 1, 0};
  const auto value_of = [&](ScalarField f) {
    return solve_cauchy_mc(ou, transport_of(std::move(f)), 0.2, 1.0, Vector::Ones(1), 0.02,
                           50.0, opts)
        .value;
  };
  const double vx = value_of(make_coordinate_field(0));
  const double vq = value_of(make_squared_norm_field());
  const double vmix = value_of(make_poly_field({0.0, 3.0, 2.0}, 0));  // 3x + 2x^2
  CHECK(vmix == doctest::Approx(3.0 * vx + 2.0 * vq).epsilon(1e-12));
}

TEST_CASE("nonnegative data produce nonnegative values") {
  const Problem cubic = make_builtin_problem("cubic", 1);
  CauchySpec spec;
  spec.c = make_const_field(-0.5);
  spec.g = make_const_field(1.0);
  spec.f = make_squared_norm_field();
  const PdeSolution sol =
      solve_cauchy_mc(cubic, spec, 0.5, 1.0, Vector::Ones(1), 0.01, 10.0, {300, 12, 1, 0});
  CHECK(sol.value >= 0.0);
}

TEST_CASE("declared bounds are spot-checked where the fields are evaluated") {
  const Problem ou = make_builtin_problem("ou", 1);

  // f enters at the terminal states; x_T ~ e^{-1}, so x_T^2 > 0.05 on every path
  ScalarField f = make_squared_norm_field();
  f.bound = 0.05;
  const PdeSolution sol = solve_cauchy_mc(ou, transport_of(std::move(f)), 0.1, 1.0,
                                          Vector::Ones(1), 0.05, 50.0, {50, 2, 1, 0});
  REQUIRE(sol.warnings.size() == 1);
  CHECK(sol.warnings[0].find("bound on f") != std::string::npos);

  // c and g are sampled along the whole path, so f(x0) = 1 style violations count
  CauchySpec rates;
  rates.c = make_squared_norm_field();
  rates.c.bound = 0.5;  // |x0|^2 = 1 already exceeds it
  rates.g = make_squared_norm_field();
  rates.g.bound = 0.5;
  rates.f = make_const_field(0.0);
  const PdeSolution along = solve_cauchy_mc(ou, rates, 0.1, 1.0, Vector::Ones(1), 0.05, 50.0,
                                            {50, 2, 1, 0});
  REQUIRE(along.warnings.size() == 2);
  CHECK(along.warnings[0].find("bound on c") != std::string::npos);
  CHECK(along.warnings[1].find("bound on g") != std::string::npos);

  const PdeSolution clean = solve_cauchy_mc(ou, transport_of(make_squared_norm_field()), 0.1,
                                            1.0, Vector::Ones(1), 0.05, 50.0, {50, 2, 1, 0});
  CHECK(clean.warnings.empty());
}

TEST_CASE("transport route matches characteristics at eps 0 and MC otherwise") {
  const Problem ou = make_builtin_problem("ou", 1);
  const ScalarField f = make_squared_norm_field();
  const PdeSolution det =
      solve_transport(ou, f, 0.0, 1.0, Vector::Ones(1), 0.01, 50.0, {100, 1, 1, 0});
  const PdeSolution ref = solve_cauchy_characteristics(ou.drift, transport_of(f), 1.0,
                                                       Vector::Ones(1), 0.01);
  CHECK(det.value == ref.value);
  CHECK(!det.stochastic);

  const PdeSolution mc =
      solve_transport(ou, f, 0.2, 1.0, Vector::Ones(1), 0.01, 50.0, {100, 1, 1, 0});
  CHECK(mc.stochastic);
}

TEST_CASE("sweep gaps scale quadratically and shrink monotonically") {
  // For the linear problem the gap is exactly quadratic in eps; amplitudes
  // are kept large relative to the Monte Carlo noise of the smallest gap so
  // the fitted slope is stable, and dt small enough that the Euler bias in
  // the gap stays below a couple of percent.
  const Problem ou = make_builtin_problem("ou", 1);
  const PdeSweepResult sweep =
      pde_epsilon_sweep(ou, transport_of(make_squared_norm_field()), {0.8, 0.4, 0.2}, 1.0,
                        Vector::Ones(1), 0.002, 50.0, {4000, 33, 1, 0});
  CHECK(std::abs(sweep.v0.value - std::exp(-2.0)) < 1e-8);
  REQUIRE(sweep.points.size() == 3);
  CHECK(sweep.points[0].epsilon == 0.8);
  CHECK(sweep.strictly_decreasing);
  CHECK(sweep.gap_fit.slope == doctest::Approx(2.0).epsilon(0.08));
}

TEST_CASE("ellipticity sampling accepts identity diffusion and rejects squashed") {
  const Problem ou = make_builtin_problem("ou", 2);
  const OperatorSpec ok{ou.drift, ou.diffusion, 1.1};
  const ConditionReport good = check_ellipticity(ok, 5.0, 2000, 3);
  CHECK(good.satisfied);
  CHECK(good.min_margin >= 0.0);

  // sigma = diag(3, 0.1): directions near e2 give <a l, l> = 0.01 < 1/k^2
  const Problem squashed =
      make_polynomial_problem({{0.0, -1.0}, {0.0, -1.0}}, {{3.0}, {0.1}}, Vector::Zero(2));
  const OperatorSpec bad{squashed.drift, squashed.diffusion, 2.0};
  const ConditionReport report = check_ellipticity(bad, 5.0, 2000, 3);
  CHECK(!report.satisfied);
  REQUIRE(report.violation_point);
}

TEST_CASE("horizon must sit on the step grid") {
  const Problem ou = make_builtin_problem("ou", 1);
  CHECK_THROWS_AS(solve_cauchy_mc(ou, transport_of(make_const_field(1.0)), 0.1, 0.55,
                                  Vector::Ones(1), 0.1, 50.0, {10, 1, 1, 0}),
                  invalid_input);
  CHECK_THROWS_AS(solve_cauchy_characteristics(ou.drift, transport_of(make_const_field(1.0)),
                                               0.55, Vector::Ones(1), 0.1),
                  invalid_input);
}

TEST_CASE("diverging characteristics are reported, not silently wrong") {
  const Problem hot = make_polynomial_problem({{0.0, 0.0, 0.0, 1.0}}, {{1.0}},
                                              Vector::Constant(1, 2.0));
  CHECK_THROWS_AS(solve_cauchy_characteristics(hot.drift, transport_of(make_const_field(1.0)),
                                               1.0, Vector::Constant(1, 2.0), 0.01),
                  diverged_path);
}
