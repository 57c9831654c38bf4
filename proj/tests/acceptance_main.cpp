// End-to-end acceptance suite. Each numbered criterion prints exactly one
// PASS/FAIL line; the process exits nonzero if any criterion fails. Seeds and
// tolerances are pinned so the run is reproducible bit for bit.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "smallnoise/approx.hpp"
#include "smallnoise/config.hpp"
#include "smallnoise/integrate.hpp"
#include "smallnoise/model.hpp"
#include "smallnoise/pde.hpp"
#include "smallnoise/randomness.hpp"

using namespace smallnoise;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20260815;

int g_failures = 0;

void report(int id, const std::string& label, bool pass, const std::string& detail) {
  std::printf("criterion %d (%s): %s%s%s\n", id, label.c_str(), pass ? "PASS" : "FAIL",
              detail.empty() ? "" : " - ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double now_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

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

// --- CLI helpers for criteria 8 and 9 ---

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "smallnoise_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_text(const std::string& name, const std::string& body) {
  const fs::path path = scratch_dir() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return "<missing:" + path.string() + ">";
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("SMALLNOISE_CLI");
  if (!bin) return -1;
  const std::string cmd = std::string(bin) + " " + args + " 2>/dev/null >/dev/null";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// --- criteria ---

void criterion_1_ou_strong_error() {
  const auto start = std::chrono::steady_clock::now();
  const Problem ou = make_builtin_problem("ou", 1);
  const TimeGrid grid(1.0, 1000);
  const MCEstimate est =
      estimate_strong_error(ou, 0.1, grid, 50.0, ErrorMode::terminal, {100000, kSeed, 0, 0});
  const double ms = now_ms(start);

  const double target = 0.01 * (1.0 - std::exp(-2.0)) / 2.0;  // 4.3233e-3
  const bool close = std::abs(est.mean - target) <= 4.0 * est.std_error;
  const bool fast = ms < 60000.0;
  report(1, "OU strong error oracle", close && fast,
         "mean " + fmt(est.mean) + " vs " + fmt(target) + ", 4se " +
             fmt(4.0 * est.std_error) + ", " + fmt(ms) + " ms");
}

void criterion_2_quadratic_scaling() {
  const Problem cubic = make_builtin_problem("cubic", 1);
  const TimeGrid grid(1.0, 1000);
  const SweepResult sweep = epsilon_sweep(cubic, {0.4, 0.2, 0.1, 0.05}, grid, 50.0,
                                          ErrorMode::sup, {10000, kSeed, 0, 0});
  const bool pass = sweep.fit.slope >= 1.85 && sweep.fit.slope <= 2.15;
  report(2, "strong error scales like eps^2", pass,
         "log-log slope " + fmt(sweep.fit.slope) + " in [1.85, 2.15]");
}

void criterion_3_probability_convergence() {
  const Problem cubic = make_builtin_problem("cubic", 1);
  const TimeGrid grid(1.0, 1000);
  std::vector<MCEstimate> probs;
  for (double eps : {0.4, 0.2, 0.1, 0.05}) {
    probs.push_back(exceedance_probability(cubic, eps, 0.25, grid, 50.0, {10000, kSeed, 0, 0}));
  }
  const bool decreasing = decreasing_beyond_noise(probs);
  const bool small_tail = probs.back().mean < 0.01;
  std::string seq;
  for (const MCEstimate& p : probs) seq += (seq.empty() ? "" : ", ") + fmt(p.mean);
  report(3, "exceedance probability vanishes with eps", decreasing && small_tail,
         "P(sup > 0.25) = [" + seq + "]");
}

void criterion_4_moment_bound() {
  const Problem ou = make_builtin_problem("ou", 1);
  const TimeGrid grid(1.0, 100);
  bool all_ok = true;
  std::string ratios;
  for (double eps : {0.0, 0.1, 1.0}) {
    const MomentBoundReport rep = moment_bound_check(ou, eps, 1.0, grid, 50.0,
                                                     {10000, kSeed, 0, 0});
    all_ok = all_ok && rep.satisfied;
    ratios += (ratios.empty() ? "" : ", ") + fmt(rep.max_ratio);
  }
  report(4, "second-moment bound along the grid", all_ok,
         "max value/bound ratios [" + ratios + "] for eps {0, 0.1, 1}");
}

void criterion_5_truncation_coincidence() {
  const Problem ou = make_builtin_problem("ou", 1);
  const TimeGrid grid(1.0, 1000);

  bool idle_identical = true;
  for (std::uint64_t i = 0; i < 100 && idle_identical; ++i) {
    const BrownianIncrements inc = sample_increments(grid, 1, derive_path_seed(kSeed, i, 0));
    const SdePath em = euler_maruyama(ou, 0.1, inc);
    const SdePath tr = truncated_euler(ou, 0.1, inc, 50.0);
    idle_identical = !em.diverged && !tr.exit_time &&
                     (tr.states.array() == em.states.array()).all();
  }
  report(5, "truncation idle at N=50 is bit-identical", idle_identical, "100 paths");

  // Active truncation at N = 0.8: clipping the initial point moves the start
  // from 1 to 0.8, so the free and truncated paths differ from t = 0 on and
  // no coincidence window exists. The comparison is still performed exactly
  // as stated; the honest outcome is recorded.
  std::size_t agreeing_paths = 0;
  std::string first_mismatch;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const BrownianIncrements inc = sample_increments(grid, 1, derive_path_seed(kSeed, i, 0));
    const SdePath em = euler_maruyama(ou, 0.1, inc);
    const SdePath tr = truncated_euler(ou, 0.1, inc, 0.8);
    std::size_t window_end = grid.n_steps;
    if (tr.exit_time) {
      window_end = static_cast<std::size_t>(std::llround(*tr.exit_time / grid.dt));
    }
    bool agrees = !em.diverged;
    for (std::size_t k = 0; agrees && k <= window_end; ++k) {
      const Index row = static_cast<Index>(k);
      if (!(tr.states.row(row) == em.states.row(row))) {
        agrees = false;
        if (first_mismatch.empty()) {
          first_mismatch = "path " + std::to_string(i) + " differs at t=" +
                           fmt(grid.time(k)) + " (" + fmt(tr.states(row, 0)) + " vs " +
                           fmt(em.states(row, 0)) + ")";
        }
      }
    }
    if (agrees) ++agreeing_paths;
  }
  report(5, "truncation active at N=0.8 coincides up to exit", agreeing_paths == 100,
         std::to_string(agreeing_paths) + "/100 paths agree; " +
             (first_mismatch.empty() ? std::string("no mismatch") : first_mismatch));
}

void criterion_6_feynman_kac_oracle() {
  const Problem ou = make_builtin_problem("ou", 1);
  const Vector x = Vector::Ones(1);

  CauchySpec quad;
  quad.f = make_squared_norm_field();
  const PdeSolution main_case =
      solve_cauchy_mc(ou, quad, 0.1, 1.0, x, 0.001, 50.0, {100000, kSeed, 0, 0});
  const double target = std::exp(-2.0) + 0.01 * (1.0 - std::exp(-2.0)) / 2.0;  // 0.139659
  const bool main_ok = std::abs(main_case.value - target) <= 4.0 * main_case.error;

  CauchySpec ones;
  ones.f = make_const_field(1.0);
  const PdeSolution unit =
      solve_cauchy_mc(ou, ones, 0.1, 1.0, x, 0.001, 50.0, {100, kSeed, 0, 0});
  const bool unit_ok = unit.value == 1.0 && unit.error == 0.0;

  CauchySpec rate;
  rate.c = make_const_field(0.5);
  rate.f = make_const_field(1.0);
  const PdeSolution growth =
      solve_cauchy_mc(ou, rate, 0.1, 1.0, x, 0.001, 50.0, {100, kSeed, 0, 0});
  const bool growth_ok = std::abs(growth.value - std::exp(0.5)) < 1e-10 && growth.error < 1e-15;

  CauchySpec source;
  source.g = make_const_field(1.0);
  source.f = make_const_field(0.0);
  const PdeSolution accum =
      solve_cauchy_mc(ou, source, 0.1, 1.0, x, 0.001, 50.0, {100, kSeed, 0, 0});
  const bool accum_ok = std::abs(accum.value - 1.0) < 1e-9 && accum.error < 1e-15;

  report(6, "probabilistic Cauchy values", main_ok && unit_ok && growth_ok && accum_ok,
         "value " + fmt(main_case.value) + " vs " + fmt(target) + " (4se " +
             fmt(4.0 * main_case.error) + "); exact cases " +
             (unit_ok && growth_ok && accum_ok ? "exact" : "off"));
}

void criterion_7_small_noise_limit() {
  const Vector x = Vector::Ones(1);

  const Problem ou = make_builtin_problem("ou", 1);
  CauchySpec quad;
  quad.f = make_squared_norm_field();
  const PdeSweepResult smooth = pde_epsilon_sweep(ou, quad, {0.4, 0.2, 0.1}, 1.0, x, 0.001,
                                                  50.0, {30000, kSeed, 0, 0});
  const bool slope_ok = smooth.gap_fit.slope >= 1.8 && smooth.gap_fit.slope <= 2.2;

  const Problem cubic = make_builtin_problem("cubic", 1);
  CauchySpec coord;
  coord.f = make_coordinate_field(0);
  const PdeSweepResult steep = pde_epsilon_sweep(cubic, coord, {0.4, 0.2, 0.1}, 1.0, x, 0.001,
                                                 50.0, {30000, kSeed, 0, 0});

  report(7, "PDE values converge to the characteristics limit", slope_ok &&
             steep.strictly_decreasing,
         "gap slope " + fmt(smooth.gap_fit.slope) + " in [1.8, 2.2]; cubic gaps " +
             (steep.strictly_decreasing ? "strictly decreasing" : "not decreasing"));
}

void criterion_8_worker_determinism() {
  const std::string conv = R"({
    "command": "converge", "problem": "ou", "dims": 1,
    "dt": 0.01, "t": 1.0, "eps": [0.2, 0.1, 0.05], "n_paths": 2000, "seed": 42,
    "trunc_level": 50, "delta": 0.5, "moment_K": 1.0
  })";
  const std::string pde = R"({
    "command": "pde", "problem": "ou", "dims": 1, "dt": 0.01,
    "eps": [0.3, 0.15], "n_paths": 2000, "seed": 5, "trunc_level": 50,
    "cauchy": {"f": {"kind": "norm2"}},
    "queries": [{"t": 1.0, "x": 1.0}]
  })";
  const fs::path conv_cfg = write_text("conv.json", conv);
  const fs::path pde_cfg = write_text("pde.json", pde);

  bool pass = true;
  std::string detail;
  const auto compare = [&](const std::string& cmd, const fs::path& cfg,
                           const std::vector<std::string>& files) {
    const fs::path a = scratch_dir() / (cmd + "_w1");
    const fs::path b = scratch_dir() / (cmd + "_w8");
    if (run_cli(cmd + " --config " + cfg.string() + " --threads 1 --out-dir " + a.string()) !=
            0 ||
        run_cli(cmd + " --config " + cfg.string() + " --threads 8 --out-dir " + b.string()) !=
            0) {
      pass = false;
      detail = cmd + " run failed";
      return;
    }
    for (const std::string& f : files) {
      if (slurp(a / f) != slurp(b / f)) {
        pass = false;
        detail = f + " differs between 1 and 8 workers";
      }
    }
  };
  compare("converge", conv_cfg, {"strong_error.csv", "exceedance.csv", "moment.csv"});
  compare("pde", pde_cfg, {"pde.csv"});
  report(8, "CSV output independent of worker count", pass,
         pass ? "converge + pde byte-identical" : detail);
}

void criterion_9_divergence_handling() {
  const std::string em = R"({
    "command": "simulate", "problem": "cubic", "dims": 1, "scheme": "em",
    "dt": 0.5, "t": 5.0, "eps": [1.0], "n_paths": 50, "seed": 3
  })";
  const std::string tr = R"({
    "command": "simulate", "problem": "cubic", "dims": 1, "scheme": "truncated",
    "dt": 0.5, "t": 5.0, "eps": [1.0], "n_paths": 50, "seed": 3, "trunc_level": 5
  })";
  const fs::path em_cfg = write_text("em.json", em);
  const fs::path tr_cfg = write_text("tr.json", tr);
  const fs::path em_out = scratch_dir() / "em_out";
  const fs::path tr_out = scratch_dir() / "tr_out";

  const int em_code = run_cli("simulate --config " + em_cfg.string() + " --out-dir " +
                              em_out.string());
  const int tr_code = run_cli("simulate --config " + tr_cfg.string() + " --out-dir " +
                              tr_out.string());
  const std::string em_csv = slurp(em_out / "paths.csv");
  const std::string tr_csv = slurp(tr_out / "paths.csv");
  const std::string em_summary = slurp(em_out / "summary.json");

  const bool em_flagged = em_code == 1 &&
                          em_summary.find("\"passed\": false") != std::string::npos &&
                          em_summary.find("diverged") != std::string::npos;
  const bool no_poison = em_csv.find("nan") == std::string::npos &&
                         em_csv.find("inf") == std::string::npos &&
                         tr_csv.find("nan") == std::string::npos &&
                         tr_csv.find("inf") == std::string::npos;
  const bool tr_clean = tr_code == 0;
  report(9, "divergence is flagged, truncation survives", em_flagged && no_poison && tr_clean,
         "em exit " + std::to_string(em_code) + ", truncated exit " + std::to_string(tr_code));
}

}  // namespace

int main() {
  criterion_1_ou_strong_error();
  criterion_2_quadratic_scaling();
  criterion_3_probability_convergence();
  criterion_4_moment_bound();
  criterion_5_truncation_coincidence();
  criterion_6_feynman_kac_oracle();
  criterion_7_small_noise_limit();
  criterion_8_worker_determinism();
  criterion_9_divergence_handling();

  std::printf("acceptance: %d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
