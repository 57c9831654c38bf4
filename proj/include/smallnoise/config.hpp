#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smallnoise/model.hpp"
#include "smallnoise/pde.hpp"
#include "smallnoise/types.hpp"

namespace smallnoise {

// Scalar-field description used in pde configs.
struct FieldSpec {
  std::string kind;  // zero | one | const | coord | poly | norm2
  double value = 0.0;
  std::vector<double> coeffs;
  Index component = 0;
  double bound = std::numeric_limits<double>::infinity();
};

struct QueryPoint {
  double t = 0.0;
  Vector x;
};

// Fully resolved run description. Everything that influences results lives
// here; threads / out_dir / assert_thresholds only control execution and are
// excluded from the resolved config embedded in outputs.
struct RunConfig {
  std::string command;  // check | simulate | converge | pde

  // problem
  std::string problem = "ou";  // ou | cubic | const | custom
  Index dims = 1;
  std::optional<Vector> x0;  // default depends on the problem
  std::vector<std::vector<double>> drift_coeffs;       // custom only
  std::vector<std::vector<double>> sigma_diag_coeffs;  // custom only
  double drift_value = 0.0;  // "const" problem
  double sigma_value = 1.0;  // "const" problem

  // discretisation / ensemble
  double dt = 0.0;
  double horizon = 0.0;  // config key "t"
  std::vector<double> eps;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double trunc_level = 0.0;
  std::string scheme = "truncated";  // em | truncated
  std::string mode = "terminal";     // terminal | sup
  bool independent_seeds = false;

  // converge extras
  std::optional<double> delta;     // exceedance level
  std::optional<double> moment_K;  // dissipativity constant for moment bound
  double slope_band_lo = 1.85;
  double slope_band_hi = 2.15;

  // check block
  double check_K = 1.0;
  double check_box = 10.0;
  std::size_t check_samples = 20000;
  std::optional<double> lipschitz_level;

  // pde block
  std::optional<FieldSpec> c_field;
  std::optional<FieldSpec> g_field;
  std::optional<FieldSpec> f_field;
  std::optional<double> ellipticity_k;
  std::vector<QueryPoint> queries;

  // execution only (not embedded in outputs)
  int threads = 1;
  bool assert_thresholds = false;
  std::string out_dir = ".";
};

struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;  // every violated constraint, not just the first
};

// Parses and validates a JSON config. On any violation config is empty and
// errors lists all of them.
ParseResult parse_config(const std::string& json_text);

// Canonical JSON text of the resolved config (sorted keys, execution-only
// fields excluded). Byte-stable for a given config, embedded in every output.
std::string resolved_config_json(const RunConfig& cfg);

// Problem described by the config (builtin or custom polynomial).
Problem problem_from_config(const RunConfig& cfg);
ScalarField field_from_spec(const FieldSpec& spec, Index dims);

// Number of grid steps implied by dt and horizon t. Throws invalid_input if
// t/dt is not close to an integer.
std::size_t steps_from_config(double dt, double t);

// Executes the run and writes outputs into cfg.out_dir.
// Exit codes: 0 success, 1 numeric failure (divergence, violated --assert
// thresholds), 2 config error.
int run(const RunConfig& cfg);

}  // namespace smallnoise
