#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "smallnoise/approx.hpp"
#include "smallnoise/config.hpp"
#include "smallnoise/ensemble.hpp"
#include "smallnoise/errors.hpp"
#include "smallnoise/integrate.hpp"
#include "smallnoise/pde.hpp"
#include "smallnoise/report.hpp"
#include "smallnoise/version.hpp"

namespace smallnoise {

namespace {

using nlohmann::json;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

json vector_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json estimate_json(const MCEstimate& e) {
  return json{{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

json condition_json(const ConditionReport& r) {
  json j{{"condition", r.condition},
         {"satisfied", r.satisfied},
         {"K", r.witness_constant},
         {"min_margin", r.min_margin},
         {"box", r.sample.box_halfwidth},
         {"n_samples", r.sample.n_samples}};
  if (r.violation_point) j["violation_point"] = vector_json(*r.violation_point);
  if (r.violation_partner) j["violation_partner"] = vector_json(*r.violation_partner);
  return j;
}

json fit_json(const SlopeFit& fit) {
  return json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"slope_std_error", fit.slope_std_error},
              {"n_used", fit.n_used}};
}

// Successive estimates decrease beyond noise: each step drops by more than
// twice the combined standard error, or both values are within twice their
// own standard error of zero.
bool decreasing_beyond_noise(const std::vector<MCEstimate>& values) {
  if (values.size() < 2) return false;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const MCEstimate& big = values[i];
    const MCEstimate& small = values[i + 1];
    const bool drop = big.mean - small.mean > 2.0 * std::hypot(big.std_error, small.std_error);
    const bool both_zero =
        big.mean <= 2.0 * big.std_error && small.mean <= 2.0 * small.std_error;
    if (!drop && !both_zero) return false;
  }
  return true;
}

struct RunContext {
  const RunConfig& cfg;
  std::string resolved;
  json summary;
  std::vector<std::string> failures;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  explicit RunContext(const RunConfig& c) : cfg(c), resolved(resolved_config_json(c)) {
    summary["schema_version"] = kSchemaVersion;
    summary["version"] = kVersion;
    summary["command"] = c.command;
    summary["config"] = json::parse(resolved);
    summary["seed"] = c.seed;
  }

  void fail(const std::string& reason) { failures.push_back(reason); }

  // Writes summary.json and reports failures. Failures exit 1 only when they
  // are hard numeric failures or --assert was given.
  int finish(bool failures_are_fatal) {
    const auto elapsed = std::chrono::steady_clock::now() - start;
    summary["timing_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    summary["passed"] = failures.empty();
    summary["failures"] = failures;
    write_file(out_path(cfg, "summary.json"), summary.dump(2) + "\n");
    for (const auto& f : failures) std::fprintf(stderr, "fail: %s\n", f.c_str());
    if (failures.empty()) return 0;
    return failures_are_fatal ? 1 : 0;
  }
};

std::uint64_t sweep_tag(const RunConfig& cfg, std::size_t j) {
  return cfg.independent_seeds ? 1 + static_cast<std::uint64_t>(j) : 0;
}

ErrorMode mode_from_config(const RunConfig& cfg) {
  return cfg.mode == "sup" ? ErrorMode::sup : ErrorMode::terminal;
}

int run_check(const RunConfig& cfg) {
  RunContext ctx(cfg);
  const Problem p = problem_from_config(cfg);

  const ConditionReport dis =
      check_dissipativity(p, cfg.check_K, cfg.check_box, cfg.check_samples, cfg.seed);
  const ConditionReport diff =
      check_difference_dissipativity(p, cfg.check_K, cfg.check_box, cfg.check_samples, cfg.seed);
  const double lip_level =
      cfg.lipschitz_level.value_or(cfg.trunc_level > 0.0 ? cfg.trunc_level : cfg.check_box);
  const double lip = estimate_local_lipschitz(p, lip_level, cfg.check_samples, cfg.seed);

  ctx.summary["checks"] = json::array({condition_json(dis), condition_json(diff)});
  ctx.summary["lipschitz"] =
      json{{"level", lip_level}, {"n_pairs", cfg.check_samples}, {"estimate", lip}};
  if (!dis.satisfied) {
    ctx.fail("dissipativity violated (min margin " + format_double(dis.min_margin) + ")");
  }
  if (!diff.satisfied) {
    ctx.fail("difference dissipativity violated (min margin " +
             format_double(diff.min_margin) + ")");
  }

  if (cfg.ellipticity_k) {
    const OperatorSpec op{p.drift, p.diffusion, *cfg.ellipticity_k};
    const ConditionReport ell = check_ellipticity(op, cfg.check_box, cfg.check_samples, cfg.seed);
    ctx.summary["checks"].push_back(condition_json(ell));
    if (!ell.satisfied) {
      ctx.fail("ellipticity violated (min margin " + format_double(ell.min_margin) + ")");
    }
  }
  return ctx.finish(cfg.assert_thresholds);
}

int run_simulate(const RunConfig& cfg) {
  RunContext ctx(cfg);
  const Problem p = problem_from_config(cfg);
  const TimeGrid grid(cfg.horizon, steps_from_config(cfg.dt, cfg.horizon));
  const Index r = p.state_dim();

  std::vector<std::string> columns = {"epsilon", "path", "diverged", "exit_time", "last_time"};
  for (Index i = 0; i < r; ++i) columns.push_back("x" + std::to_string(i));
  CsvBuilder csv(ctx.resolved, columns);

  struct PathRow {
    bool diverged = false;
    std::optional<double> exit_time;
    double last_time = 0.0;
    Vector terminal;
  };

  json per_eps = json::array();
  for (std::size_t j = 0; j < cfg.eps.size(); ++j) {
    const double eps = cfg.eps[j];
    const std::uint64_t tag = sweep_tag(cfg, j);

    std::vector<PathRow> rows(cfg.n_paths);
    parallel_for_index(cfg.n_paths, cfg.threads, [&](std::size_t i) {
      const BrownianIncrements inc =
          sample_increments(grid, p.noise_dim(), derive_path_seed(cfg.seed, i, tag));
      const SdePath path = cfg.scheme == "em" ? euler_maruyama(p, eps, inc)
                                              : truncated_euler(p, eps, inc, cfg.trunc_level);
      rows[i] = PathRow{path.diverged, path.exit_time, grid.time(path.last_step),
                       Vector(path.terminal())};
    });

    std::size_t n_diverged = 0;
    std::size_t n_exited = 0;
    std::optional<std::size_t> first_diverged;
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
      const PathRow& row = rows[i];
      if (row.diverged) {
        ++n_diverged;
        if (!first_diverged) first_diverged = i;
      }
      if (row.exit_time) ++n_exited;
      csv.add_cell(eps);
      csv.add_cell(static_cast<std::uint64_t>(i));
      csv.add_cell(std::string(row.diverged ? "1" : "0"));
      if (row.exit_time) {
        csv.add_cell(*row.exit_time);
      } else {
        csv.add_empty_cell();
      }
      csv.add_cell(row.last_time);
      for (Index k = 0; k < r; ++k) csv.add_cell(row.terminal[k]);
      csv.end_row();
    }

    json block{{"epsilon", eps},
               {"n_paths", cfg.n_paths},
               {"n_diverged", n_diverged},
               {"n_exited", n_exited}};
    if (first_diverged) block["first_diverged_path"] = *first_diverged;

    const std::size_t n_ok = cfg.n_paths - n_diverged;
    if (n_ok > 0) {
      // component-wise pairwise mean over completed paths, in path order
      Vector mean = Vector::Zero(r);
      std::vector<double> vals(n_ok);
      for (Index k = 0; k < r; ++k) {
        std::size_t m = 0;
        for (std::size_t i = 0; i < cfg.n_paths; ++i) {
          if (!rows[i].diverged) vals[m++] = rows[i].terminal[k];
        }
        mean[k] = pairwise_sum(vals.data(), n_ok) / static_cast<double>(n_ok);
      }
      block["terminal_mean"] = vector_json(mean);
    }
    per_eps.push_back(block);

    if (n_diverged > 0) {
      ctx.fail("epsilon " + format_double(eps) + ": " + std::to_string(n_diverged) +
               " of " + std::to_string(cfg.n_paths) + " paths diverged (first at path " +
               std::to_string(*first_diverged) + ")");
    }
  }

  write_file(out_path(cfg, "paths.csv"), csv.text());
  ctx.summary["ensembles"] = per_eps;
  return ctx.finish(true);  // divergence is always a numeric failure
}

int run_converge(const RunConfig& cfg) {
  RunContext ctx(cfg);
  const Problem p = problem_from_config(cfg);
  const TimeGrid grid(cfg.horizon, steps_from_config(cfg.dt, cfg.horizon));
  const ErrorMode mode = mode_from_config(cfg);
  const EnsembleOptions opts{cfg.n_paths, cfg.seed, cfg.threads, 0};

  SweepResult sweep;
  try {
    sweep = epsilon_sweep(p, cfg.eps, grid, cfg.trunc_level, mode, opts,
                          !cfg.independent_seeds);
  } catch (const diverged_path& e) {
    ctx.fail(std::string("sweep aborted: ") + e.what());
    return ctx.finish(true);
  }

  {
    CsvBuilder csv(ctx.resolved,
                   {"epsilon", "mode", "n_paths", "dt", "t", "mean_sq_err", "stderr"});
    for (std::size_t j = 0; j < sweep.epsilons.size(); ++j) {
      csv.add_cell(sweep.epsilons[j]);
      csv.add_cell(cfg.mode);
      csv.add_cell(static_cast<std::uint64_t>(sweep.estimates[j].n_paths));
      csv.add_cell(grid.dt);
      csv.add_cell(grid.horizon);
      csv.add_cell(sweep.estimates[j].mean);
      csv.add_cell(sweep.estimates[j].std_error);
      csv.end_row();
    }
    write_file(out_path(cfg, "strong_error.csv"), csv.text());
  }

  json points = json::array();
  for (std::size_t j = 0; j < sweep.epsilons.size(); ++j) {
    json pt = estimate_json(sweep.estimates[j]);
    pt["epsilon"] = sweep.epsilons[j];
    points.push_back(pt);
  }
  ctx.summary["strong_error"] = json{{"mode", cfg.mode},
                                     {"points", points},
                                     {"fit", fit_json(sweep.fit)},
                                     {"slope_band", {cfg.slope_band_lo, cfg.slope_band_hi}}};
  const bool in_band =
      sweep.fit.slope >= cfg.slope_band_lo && sweep.fit.slope <= cfg.slope_band_hi;
  ctx.summary["strong_error"]["slope_in_band"] = in_band;
  if (!in_band) {
    ctx.fail("fitted slope " + format_double(sweep.fit.slope) + " outside [" +
             format_double(cfg.slope_band_lo) + ", " + format_double(cfg.slope_band_hi) + "]");
  }

  if (cfg.delta) {
    std::vector<MCEstimate> probs;
    json rows = json::array();
    CsvBuilder csv(ctx.resolved, {"epsilon", "delta", "n_paths", "probability", "stderr"});
    for (std::size_t j = 0; j < sweep.epsilons.size(); ++j) {
      EnsembleOptions eopts = opts;
      eopts.stream_tag = sweep_tag(cfg, j);
      const MCEstimate prob =
          exceedance_probability(p, sweep.epsilons[j], *cfg.delta, grid, cfg.trunc_level, eopts);
      probs.push_back(prob);
      csv.add_cell(sweep.epsilons[j]);
      csv.add_cell(*cfg.delta);
      csv.add_cell(static_cast<std::uint64_t>(prob.n_paths));
      csv.add_cell(prob.mean);
      csv.add_cell(prob.std_error);
      csv.end_row();
      json pt = estimate_json(prob);
      pt["epsilon"] = sweep.epsilons[j];
      rows.push_back(pt);
    }
    write_file(out_path(cfg, "exceedance.csv"), csv.text());
    const bool decreasing = decreasing_beyond_noise(probs);
    ctx.summary["exceedance"] =
        json{{"delta", *cfg.delta}, {"points", rows}, {"decreasing", decreasing}};
    if (!decreasing) ctx.fail("exceedance probabilities do not decrease with epsilon");
  }

  if (cfg.moment_K) {
    json blocks = json::array();
    CsvBuilder csv(ctx.resolved, {"epsilon", "t", "value", "stderr", "bound"});
    bool all_ok = true;
    for (std::size_t j = 0; j < sweep.epsilons.size(); ++j) {
      const MomentBoundReport rep =
          moment_bound_check(p, sweep.epsilons[j], *cfg.moment_K, grid, cfg.trunc_level, opts);
      for (std::size_t k = 0; k < rep.curve.value.size(); ++k) {
        csv.add_cell(sweep.epsilons[j]);
        csv.add_cell(grid.time(k));
        csv.add_cell(rep.curve.value[k]);
        csv.add_cell(rep.curve.std_error[k]);
        csv.add_cell(rep.bound[k]);
        csv.end_row();
      }
      blocks.push_back(json{{"epsilon", sweep.epsilons[j]},
                            {"satisfied", rep.satisfied},
                            {"max_ratio", rep.max_ratio}});
      if (!rep.satisfied) {
        all_ok = false;
        ctx.fail("moment bound violated at epsilon " + format_double(sweep.epsilons[j]) +
                 " (max ratio " + format_double(rep.max_ratio) + ")");
      }
    }
    write_file(out_path(cfg, "moment.csv"), csv.text());
    ctx.summary["moment_bound"] =
        json{{"K", *cfg.moment_K}, {"per_epsilon", blocks}, {"satisfied", all_ok}};
  }

  return ctx.finish(cfg.assert_thresholds);
}

int run_pde(const RunConfig& cfg) {
  RunContext ctx(cfg);
  const Problem p = problem_from_config(cfg);
  const EnsembleOptions opts{cfg.n_paths, cfg.seed, cfg.threads, 0};

  CauchySpec spec;
  if (cfg.c_field) spec.c = field_from_spec(*cfg.c_field, p.state_dim());
  if (cfg.g_field) spec.g = field_from_spec(*cfg.g_field, p.state_dim());
  spec.f = field_from_spec(*cfg.f_field, p.state_dim());

  if (cfg.ellipticity_k) {
    const OperatorSpec op{p.drift, p.diffusion, *cfg.ellipticity_k};
    const ConditionReport ell = check_ellipticity(op, cfg.trunc_level, 20000, cfg.seed);
    ctx.summary["ellipticity"] = condition_json(ell);
    if (!ell.satisfied) {
      ctx.fail("ellipticity violated (min margin " + format_double(ell.min_margin) + ")");
    }
  }

  std::vector<double> positive;
  for (double e : cfg.eps) {
    if (e > 0.0) positive.push_back(e);
  }
  std::sort(positive.begin(), positive.end(), std::greater<double>());
  positive.erase(std::unique(positive.begin(), positive.end()), positive.end());

  const Index r = p.state_dim();
  std::vector<std::string> columns = {"t"};
  for (Index i = 0; i < r; ++i) columns.push_back("x" + std::to_string(i));
  columns.insert(columns.end(), {"epsilon", "value", "stderr_or_quaderr", "gap_to_v0"});
  CsvBuilder csv(ctx.resolved, columns);

  const auto add_solution = [&](const PdeSolution& s, std::optional<double> gap) {
    csv.add_cell(s.t);
    for (Index i = 0; i < r; ++i) csv.add_cell(s.x[i]);
    csv.add_cell(s.epsilon);
    csv.add_cell(s.value);
    csv.add_cell(s.error);
    if (gap) {
      csv.add_cell(*gap);
    } else {
      csv.add_empty_cell();
    }
    csv.end_row();
  };

  json queries = json::array();
  for (const QueryPoint& q : cfg.queries) {
    const PdeSweepResult sweep = pde_epsilon_sweep(p, spec, positive, q.t, q.x, cfg.dt,
                                                   cfg.trunc_level, opts,
                                                   !cfg.independent_seeds);
    add_solution(sweep.v0, std::nullopt);
    json points = json::array();
    std::vector<MCEstimate> gaps;
    std::vector<std::string> warnings = sweep.v0.warnings;
    for (const PdeSweepPoint& pt : sweep.points) {
      add_solution(pt.solution, pt.gap_to_v0);
      points.push_back(json{{"epsilon", pt.epsilon},
                            {"value", pt.solution.value},
                            {"std_error", pt.solution.error},
                            {"gap_to_v0", pt.gap_to_v0}});
      gaps.push_back(MCEstimate{pt.gap_to_v0, pt.solution.error, pt.solution.n_paths});
      warnings.insert(warnings.end(), pt.solution.warnings.begin(),
                      pt.solution.warnings.end());
    }

    json qj{{"t", q.t},
            {"x", vector_json(q.x)},
            {"v0", sweep.v0.value},
            {"quadrature_error", sweep.v0.error},
            {"points", points},
            {"warnings", warnings}};
    if (positive.size() >= 3) qj["gap_fit"] = fit_json(sweep.gap_fit);
    if (positive.size() >= 2) {
      qj["strictly_decreasing"] = sweep.strictly_decreasing;
      if (!sweep.strictly_decreasing) {
        ctx.fail("query t=" + format_double(q.t) +
                 ": gaps to the limit do not decrease with epsilon");
      }
    }
    queries.push_back(qj);
  }

  write_file(out_path(cfg, "pde.csv"), csv.text());
  ctx.summary["queries"] = queries;
  return ctx.finish(cfg.assert_thresholds);
}

}  // namespace

int run(const RunConfig& cfg) {
  try {
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.command == "check") return run_check(cfg);
    if (cfg.command == "simulate") return run_simulate(cfg);
    if (cfg.command == "converge") return run_converge(cfg);
    if (cfg.command == "pde") return run_pde(cfg);
    std::fprintf(stderr, "error: unknown command \"%s\"\n", cfg.command.c_str());
    return 2;
  } catch (const diverged_path& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const invalid_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace smallnoise
