#include "smallnoise/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "smallnoise/errors.hpp"

namespace smallnoise {

namespace {

using nlohmann::json;

const std::set<std::string> kCommands = {"check", "simulate", "converge", "pde"};
const std::set<std::string> kProblems = {"ou", "cubic", "const", "custom"};
const std::set<std::string> kSchemes = {"em", "truncated"};
const std::set<std::string> kModes = {"terminal", "sup"};
const std::set<std::string> kFieldKinds = {"zero", "one", "const", "coord", "poly", "norm2"};

struct Collector {
  std::vector<std::string> errors;
  void add(const std::string& msg) { errors.push_back(msg); }
  bool ok() const { return errors.empty(); }
};

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where, Collector& c) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) c.add(where + ": unknown field \"" + it.key() + "\"");
  }
}

bool want_finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

// Each getter returns true when the value was present and usable.
bool get_double(const json& obj, const std::string& key, Collector& c, double& out) {
  if (!obj.contains(key)) return false;
  if (!want_finite_number(obj[key])) {
    c.add(key + ": must be a finite number");
    return false;
  }
  out = obj[key].get<double>();
  return true;
}

bool get_positive(const json& obj, const std::string& key, Collector& c, double& out) {
  double v;
  if (!get_double(obj, key, c, v)) return false;
  if (v <= 0.0) {
    c.add(key + ": must be positive");
    return false;
  }
  out = v;
  return true;
}

bool get_uint(const json& obj, const std::string& key, Collector& c, std::uint64_t& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj[key];
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    c.add(key + ": must be an integer");
    return false;
  }
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    c.add(key + ": must be nonnegative");
    return false;
  }
  out = v.get<std::uint64_t>();
  return true;
}

bool get_string(const json& obj, const std::string& key, Collector& c, std::string& out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_string()) {
    c.add(key + ": must be a string");
    return false;
  }
  out = obj[key].get<std::string>();
  return true;
}

bool get_bool(const json& obj, const std::string& key, Collector& c, bool& out) {
  if (!obj.contains(key)) return false;
  if (!obj[key].is_boolean()) {
    c.add(key + ": must be a boolean");
    return false;
  }
  out = obj[key].get<bool>();
  return true;
}

bool get_coeff_rows(const json& obj, const std::string& key, Collector& c,
                    std::vector<std::vector<double>>& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj[key];
  if (!v.is_array() || v.empty()) {
    c.add(key + ": must be a nonempty array of coefficient lists");
    return false;
  }
  out.clear();
  for (const auto& row : v) {
    if (!row.is_array()) {
      c.add(key + ": each component must be a coefficient list");
      return false;
    }
    std::vector<double> cs;
    for (const auto& e : row) {
      if (!want_finite_number(e)) {
        c.add(key + ": coefficients must be finite numbers");
        return false;
      }
      cs.push_back(e.get<double>());
    }
    out.push_back(std::move(cs));
  }
  return true;
}

// x may be a scalar (broadcast) or an array of length dims.
bool get_point(const json& v, Index dims, const std::string& where, Collector& c, Vector& out) {
  if (want_finite_number(v)) {
    out = Vector::Constant(dims, v.get<double>());
    return true;
  }
  if (v.is_array()) {
    if (static_cast<Index>(v.size()) != dims) {
      c.add(where + ": length must equal dims");
      return false;
    }
    out.resize(dims);
    for (Index i = 0; i < dims; ++i) {
      if (!want_finite_number(v[static_cast<std::size_t>(i)])) {
        c.add(where + ": entries must be finite numbers");
        return false;
      }
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return true;
  }
  c.add(where + ": must be a number or an array of numbers");
  return false;
}

bool parse_field_spec(const json& v, const std::string& where, Collector& c, FieldSpec& out) {
  if (!v.is_object()) {
    c.add(where + ": must be an object with a \"kind\"");
    return false;
  }
  reject_unknown_keys(v, {"kind", "value", "coeffs", "component", "bound"}, where, c);
  std::string kind;
  if (!get_string(v, "kind", c, kind)) {
    c.add(where + ": missing \"kind\"");
    return false;
  }
  if (!kFieldKinds.count(kind)) {
    c.add(where + ": unknown kind \"" + kind + "\"");
    return false;
  }
  out.kind = kind;
  if (kind == "const") {
    if (!get_double(v, "value", c, out.value)) {
      c.add(where + ": const field needs \"value\"");
      return false;
    }
  }
  if (kind == "poly") {
    if (!v.contains("coeffs") || !v["coeffs"].is_array()) {
      c.add(where + ": poly field needs a \"coeffs\" array");
      return false;
    }
    for (const auto& e : v["coeffs"]) {
      if (!want_finite_number(e)) {
        c.add(where + ": poly coefficients must be finite numbers");
        return false;
      }
      out.coeffs.push_back(e.get<double>());
    }
  }
  if (v.contains("component")) {
    std::uint64_t comp = 0;
    if (get_uint(v, "component", c, comp)) out.component = static_cast<Index>(comp);
  }
  double bound;
  if (get_double(v, "bound", c, bound)) {
    if (bound < 0.0) {
      c.add(where + ": bound must be nonnegative");
    } else {
      out.bound = bound;
    }
  }
  return true;
}

json field_spec_to_json(const FieldSpec& spec) {
  json j;
  j["kind"] = spec.kind;
  if (spec.kind == "const") j["value"] = spec.value;
  if (spec.kind == "poly") j["coeffs"] = spec.coeffs;
  if (spec.kind == "poly" || spec.kind == "coord") j["component"] = spec.component;
  if (std::isfinite(spec.bound)) j["bound"] = spec.bound;
  return j;
}

}  // namespace

std::size_t steps_from_config(double dt, double t) {
  if (!std::isfinite(t) || t <= 0.0 || !std::isfinite(dt) || dt <= 0.0) {
    throw invalid_input("t and dt must be positive and finite");
  }
  const double ratio = t / dt;
  const double rounded = std::nearbyint(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
    throw invalid_input("t must be an integer multiple of dt");
  }
  if (rounded > 1e8) throw invalid_input("too many time steps");
  return static_cast<std::size_t>(rounded);
}

ParseResult parse_config(const std::string& json_text) {
  ParseResult result;
  Collector c;

  const json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) {
    result.errors.push_back("config is not valid JSON");
    return result;
  }
  if (!root.is_object()) {
    result.errors.push_back("config must be a JSON object");
    return result;
  }

  static const std::set<std::string> kTopKeys = {
      "command",     "problem",     "dims",        "x0",          "drift",
      "sigma",       "drift_value", "sigma_value", "dt",          "t",
      "eps",         "n_paths",     "seed",        "trunc_level", "scheme",
      "mode",        "independent_seeds",          "delta",       "moment_K",
      "slope_band",  "check",       "cauchy",      "ellipticity_k", "queries"};
  reject_unknown_keys(root, kTopKeys, "config", c);

  RunConfig cfg;

  if (!get_string(root, "command", c, cfg.command)) c.add("command: required");
  if (!cfg.command.empty() && !kCommands.count(cfg.command)) {
    c.add("command: must be one of check, simulate, converge, pde");
  }
  const std::string& cmd = cfg.command;
  const bool needs_grid = cmd == "simulate" || cmd == "converge";
  const bool needs_ensemble = cmd == "simulate" || cmd == "converge" || cmd == "pde";

  get_string(root, "problem", c, cfg.problem);
  if (!kProblems.count(cfg.problem)) c.add("problem: must be one of ou, cubic, const, custom");

  std::uint64_t dims_raw = 0;
  if (get_uint(root, "dims", c, dims_raw)) {
    if (dims_raw == 0 || dims_raw > 64) {
      c.add("dims: must be between 1 and 64");
    } else {
      cfg.dims = static_cast<Index>(dims_raw);
    }
  }

  if (cfg.problem == "custom") {
    if (!get_coeff_rows(root, "drift", c, cfg.drift_coeffs)) {
      if (!root.contains("drift")) c.add("drift: required for a custom problem");
    }
    if (root.contains("sigma")) get_coeff_rows(root, "sigma", c, cfg.sigma_diag_coeffs);
    if (!cfg.drift_coeffs.empty()) {
      const Index from_drift = static_cast<Index>(cfg.drift_coeffs.size());
      if (root.contains("dims") && cfg.dims != from_drift) {
        c.add("dims: does not match the number of drift components");
      }
      cfg.dims = from_drift;
      if (cfg.sigma_diag_coeffs.empty()) {
        // default sigma = I
        cfg.sigma_diag_coeffs.assign(static_cast<std::size_t>(cfg.dims), {1.0});
      } else if (cfg.sigma_diag_coeffs.size() != cfg.drift_coeffs.size()) {
        c.add("sigma: component count must match drift");
      }
    }
  } else {
    for (const char* key : {"drift", "sigma"}) {
      if (root.contains(key)) c.add(std::string(key) + ": only valid for problem \"custom\"");
    }
  }

  if (cfg.problem == "const") {
    get_double(root, "drift_value", c, cfg.drift_value);
    get_double(root, "sigma_value", c, cfg.sigma_value);
  } else {
    for (const char* key : {"drift_value", "sigma_value"}) {
      if (root.contains(key)) c.add(std::string(key) + ": only valid for problem \"const\"");
    }
  }

  if (root.contains("x0")) {
    Vector x0;
    if (get_point(root["x0"], cfg.dims, "x0", c, x0)) cfg.x0 = x0;
  }

  // grid and ensemble parameters
  const bool has_dt = get_positive(root, "dt", c, cfg.dt);
  const bool has_t = get_positive(root, "t", c, cfg.horizon);
  if (needs_grid || cmd == "pde") {
    if (!has_dt && !root.contains("dt")) c.add("dt: required for this command");
  }
  if (needs_grid && !has_t && !root.contains("t")) c.add("t: required for this command");
  if (has_dt && has_t) {
    try {
      steps_from_config(cfg.dt, cfg.horizon);
    } catch (const invalid_input& e) {
      c.add(std::string("t/dt: ") + e.what());
    }
  }

  if (root.contains("eps")) {
    const json& v = root["eps"];
    if (!v.is_array() || v.empty()) {
      c.add("eps: must be a nonempty array of numbers");
    } else {
      for (const auto& e : v) {
        if (!want_finite_number(e) || e.get<double>() < 0.0) {
          c.add("eps: entries must be finite and nonnegative");
          cfg.eps.clear();
          break;
        }
        cfg.eps.push_back(e.get<double>());
      }
    }
  } else if (needs_ensemble) {
    c.add("eps: required for this command");
  }
  if (cmd == "converge" && !cfg.eps.empty()) {
    std::vector<double> sorted = cfg.eps;
    std::sort(sorted.begin(), sorted.end());
    const bool distinct = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    if (sorted.size() < 3 || !distinct || sorted.front() <= 0.0) {
      c.add("eps: converge needs at least 3 distinct positive values");
    }
  }
  if (cmd == "pde" && !cfg.eps.empty()) {
    if (std::none_of(cfg.eps.begin(), cfg.eps.end(), [](double e) { return e > 0.0; })) {
      c.add("eps: pde needs at least one positive value");
    }
  }

  std::uint64_t n_paths = 0;
  if (get_uint(root, "n_paths", c, n_paths)) {
    if (n_paths == 0 || n_paths > 1000000000ULL) {
      c.add("n_paths: must be between 1 and 1e9");
    } else if (n_paths < 2 && (cmd == "converge" || cmd == "pde")) {
      c.add("n_paths: estimators need at least 2 paths");
    } else {
      cfg.n_paths = static_cast<std::size_t>(n_paths);
    }
  } else if (needs_ensemble && !root.contains("n_paths")) {
    c.add("n_paths: required for this command");
  }

  if (!get_uint(root, "seed", c, cfg.seed) && !root.contains("seed")) {
    c.add("seed: required");
  }

  const bool has_level = get_positive(root, "trunc_level", c, cfg.trunc_level);
  get_string(root, "scheme", c, cfg.scheme);
  if (!kSchemes.count(cfg.scheme)) c.add("scheme: must be em or truncated");
  if (!has_level && !root.contains("trunc_level")) {
    const bool level_needed =
        cmd == "converge" || cmd == "pde" || (cmd == "simulate" && cfg.scheme == "truncated");
    if (level_needed) c.add("trunc_level: required for this command");
  }

  get_string(root, "mode", c, cfg.mode);
  if (!kModes.count(cfg.mode)) c.add("mode: must be terminal or sup");
  get_bool(root, "independent_seeds", c, cfg.independent_seeds);

  if (root.contains("delta")) {
    if (cmd != "converge") {
      c.add("delta: only valid for converge");
    } else {
      double d;
      if (get_positive(root, "delta", c, d)) cfg.delta = d;
    }
  }
  if (root.contains("moment_K")) {
    if (cmd != "converge") {
      c.add("moment_K: only valid for converge");
    } else {
      double k;
      if (get_double(root, "moment_K", c, k)) {
        if (k < 0.0) {
          c.add("moment_K: must be nonnegative");
        } else {
          cfg.moment_K = k;
        }
      }
    }
  }
  if (root.contains("slope_band")) {
    const json& v = root["slope_band"];
    if (cmd != "converge") {
      c.add("slope_band: only valid for converge");
    } else if (!v.is_array() || v.size() != 2 || !want_finite_number(v[0]) ||
               !want_finite_number(v[1]) || !(v[0].get<double>() < v[1].get<double>())) {
      c.add("slope_band: must be [lo, hi] with lo < hi");
    } else {
      cfg.slope_band_lo = v[0].get<double>();
      cfg.slope_band_hi = v[1].get<double>();
    }
  }

  if (root.contains("check")) {
    const json& v = root["check"];
    if (cmd != "check") {
      c.add("check: block only valid for the check command");
    } else if (!v.is_object()) {
      c.add("check: must be an object");
    } else {
      reject_unknown_keys(v, {"K", "box", "n_samples", "lipschitz_level"}, "check", c);
      double k;
      if (get_double(v, "K", c, k)) {
        if (k < 0.0) {
          c.add("check.K: must be nonnegative");
        } else {
          cfg.check_K = k;
        }
      }
      get_positive(v, "box", c, cfg.check_box);
      std::uint64_t ns;
      if (get_uint(v, "n_samples", c, ns)) {
        if (ns == 0 || ns > 100000000ULL) {
          c.add("check.n_samples: must be between 1 and 1e8");
        } else {
          cfg.check_samples = static_cast<std::size_t>(ns);
        }
      }
      double ll;
      if (get_positive(v, "lipschitz_level", c, ll)) cfg.lipschitz_level = ll;
    }
  }

  if (root.contains("cauchy")) {
    const json& v = root["cauchy"];
    if (cmd != "pde") {
      c.add("cauchy: block only valid for the pde command");
    } else if (!v.is_object()) {
      c.add("cauchy: must be an object");
    } else {
      reject_unknown_keys(v, {"c", "g", "f"}, "cauchy", c);
      FieldSpec spec;
      if (v.contains("c") && parse_field_spec(v["c"], "cauchy.c", c, spec)) cfg.c_field = spec;
      spec = FieldSpec{};
      if (v.contains("g") && parse_field_spec(v["g"], "cauchy.g", c, spec)) cfg.g_field = spec;
      spec = FieldSpec{};
      if (v.contains("f") && parse_field_spec(v["f"], "cauchy.f", c, spec)) cfg.f_field = spec;
      if (!v.contains("f")) c.add("cauchy.f: required (initial data)");
    }
  } else if (cmd == "pde") {
    c.add("cauchy: required for the pde command");
  }

  if (root.contains("ellipticity_k")) {
    if (cmd != "pde" && cmd != "check") {
      c.add("ellipticity_k: only valid for pde or check");
    } else {
      double k;
      if (get_double(root, "ellipticity_k", c, k)) {
        if (k < 1.0) {
          c.add("ellipticity_k: must be >= 1");
        } else {
          cfg.ellipticity_k = k;
        }
      }
    }
  }

  if (root.contains("queries")) {
    const json& v = root["queries"];
    if (cmd != "pde") {
      c.add("queries: only valid for the pde command");
    } else if (!v.is_array() || v.empty()) {
      c.add("queries: must be a nonempty array");
    } else {
      for (std::size_t qi = 0; qi < v.size(); ++qi) {
        const std::string where = "queries[" + std::to_string(qi) + "]";
        const json& q = v[qi];
        if (!q.is_object()) {
          c.add(where + ": must be an object with t and x");
          continue;
        }
        reject_unknown_keys(q, {"t", "x"}, where, c);
        QueryPoint point;
        bool ok = true;
        if (!q.contains("t") || !want_finite_number(q["t"]) || q["t"].get<double>() <= 0.0) {
          c.add(where + ".t: must be a positive number");
          ok = false;
        } else {
          point.t = q["t"].get<double>();
          if (cfg.dt > 0.0) {
            try {
              steps_from_config(cfg.dt, point.t);
            } catch (const invalid_input& e) {
              c.add(where + ".t: " + e.what());
              ok = false;
            }
          }
        }
        if (!q.contains("x")) {
          c.add(where + ".x: required");
          ok = false;
        } else if (!get_point(q["x"], cfg.dims, where + ".x", c, point.x)) {
          ok = false;
        }
        if (ok) cfg.queries.push_back(std::move(point));
      }
    }
  } else if (cmd == "pde") {
    c.add("queries: required for the pde command");
  }

  if (!c.ok()) {
    result.errors = std::move(c.errors);
    return result;
  }

  // defaults that depend on other fields
  if (!cfg.x0) {
    if (cfg.problem == "ou" || cfg.problem == "cubic") {
      cfg.x0 = Vector(Vector::Ones(cfg.dims));
    } else {
      cfg.x0 = Vector(Vector::Zero(cfg.dims));
    }
  }

  result.config = std::move(cfg);
  return result;
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  j["problem"] = cfg.problem;
  j["dims"] = cfg.dims;
  if (cfg.x0) {
    std::vector<double> x0(cfg.x0->data(), cfg.x0->data() + cfg.x0->size());
    j["x0"] = x0;
  }
  if (cfg.problem == "custom") {
    j["drift"] = cfg.drift_coeffs;
    j["sigma"] = cfg.sigma_diag_coeffs;
  }
  if (cfg.problem == "const") {
    j["drift_value"] = cfg.drift_value;
    j["sigma_value"] = cfg.sigma_value;
  }
  j["seed"] = cfg.seed;
  if (cfg.dt > 0.0) j["dt"] = cfg.dt;
  if (cfg.horizon > 0.0) j["t"] = cfg.horizon;
  if (!cfg.eps.empty()) j["eps"] = cfg.eps;
  if (cfg.n_paths > 0) j["n_paths"] = cfg.n_paths;
  if (cfg.trunc_level > 0.0) j["trunc_level"] = cfg.trunc_level;

  if (cfg.command == "simulate" || cfg.command == "converge" || cfg.command == "pde") {
    j["scheme"] = cfg.scheme;
    j["independent_seeds"] = cfg.independent_seeds;
  }
  if (cfg.command == "converge") {
    j["mode"] = cfg.mode;
    j["slope_band"] = {cfg.slope_band_lo, cfg.slope_band_hi};
    if (cfg.delta) j["delta"] = *cfg.delta;
    if (cfg.moment_K) j["moment_K"] = *cfg.moment_K;
  }
  if (cfg.command == "check") {
    json chk;
    chk["K"] = cfg.check_K;
    chk["box"] = cfg.check_box;
    chk["n_samples"] = cfg.check_samples;
    if (cfg.lipschitz_level) chk["lipschitz_level"] = *cfg.lipschitz_level;
    j["check"] = chk;
  }
  if (cfg.command == "pde") {
    json cauchy;
    if (cfg.c_field) cauchy["c"] = field_spec_to_json(*cfg.c_field);
    if (cfg.g_field) cauchy["g"] = field_spec_to_json(*cfg.g_field);
    if (cfg.f_field) cauchy["f"] = field_spec_to_json(*cfg.f_field);
    j["cauchy"] = cauchy;
    json queries = json::array();
    for (const auto& q : cfg.queries) {
      json qj;
      qj["t"] = q.t;
      qj["x"] = std::vector<double>(q.x.data(), q.x.data() + q.x.size());
      queries.push_back(qj);
    }
    j["queries"] = queries;
  }
  if (cfg.ellipticity_k) j["ellipticity_k"] = *cfg.ellipticity_k;
  return j.dump();
}

Problem problem_from_config(const RunConfig& cfg) {
  const Vector& x0 = *cfg.x0;
  if (cfg.problem == "custom") {
    return make_polynomial_problem(cfg.drift_coeffs, cfg.sigma_diag_coeffs, x0);
  }
  return make_builtin_problem(cfg.problem, cfg.dims, x0, cfg.drift_value, cfg.sigma_value);
}

ScalarField field_from_spec(const FieldSpec& spec, Index dims) {
  ScalarField field;
  if (spec.kind == "zero") {
    field = make_const_field(0.0);
  } else if (spec.kind == "one") {
    field = make_const_field(1.0);
  } else if (spec.kind == "const") {
    field = make_const_field(spec.value);
  } else if (spec.kind == "coord") {
    if (spec.component >= dims) throw invalid_input("field component out of range");
    field = make_coordinate_field(spec.component);
  } else if (spec.kind == "poly") {
    if (spec.component >= dims) throw invalid_input("field component out of range");
    field = make_poly_field(spec.coeffs, spec.component);
  } else if (spec.kind == "norm2") {
    field = make_squared_norm_field();
  } else {
    throw invalid_input("unknown field kind: " + spec.kind);
  }
  if (std::isfinite(spec.bound)) field.bound = spec.bound;
  return field;
}

}  // namespace smallnoise
