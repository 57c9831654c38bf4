#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smallnoise/config.hpp"

namespace {

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-noise SDE simulation and convergence toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string cmd_name;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> scheme;
  std::optional<double> trunc_level;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<std::size_t> n_paths;
  std::vector<double> eps;
  bool assert_flag = false;

  const std::vector<std::pair<std::string, std::string>> subs = {
      {"check", "sample the coefficient conditions of the configured problem"},
      {"simulate", "integrate an ensemble of sample paths"},
      {"converge", "strong-error sweep across noise amplitudes"},
      {"pde", "Cauchy problem values via the probabilistic representation"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->callback([&cmd_name, n = name] { cmd_name = n; });
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "override the master seed");
    sub->add_option("--threads", threads, "worker threads (0 = hardware)")
        ->check(CLI::Range(0, 1024));
    sub->add_option("--out-dir", out_dir, "output directory (default .)");
    sub->add_option("--scheme", scheme, "override the scheme (em | truncated)");
    sub->add_option("--trunc-level", trunc_level, "override the truncation level");
    sub->add_option("--dt", dt, "override the step size");
    sub->add_option("--t", horizon, "override the time horizon");
    sub->add_option("--eps", eps, "override the noise amplitudes");
    sub->add_option("--n-paths", n_paths, "override the ensemble size");
    sub->add_flag("--assert", assert_flag,
                  "exit 1 when a checked threshold fails instead of just reporting it");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string text;
  if (!read_file(config_path, text)) {
    std::fprintf(stderr, "error: cannot read config file %s\n", config_path.c_str());
    return 2;
  }

  // Merge command-line overrides into the JSON before validation so every
  // constraint is enforced in one place and errors are reported together.
  nlohmann::json root = nlohmann::json::parse(text, nullptr, false);
  if (!root.is_discarded() && root.is_object()) {
    if (!root.contains("command")) {
      root["command"] = cmd_name;
    } else if (root["command"] != cmd_name) {
      std::fprintf(stderr, "config error: config command \"%s\" does not match subcommand \"%s\"\n",
                   root["command"].dump().c_str(), cmd_name.c_str());
      return 2;
    }
    if (seed) root["seed"] = *seed;
    if (scheme) root["scheme"] = *scheme;
    if (trunc_level) root["trunc_level"] = *trunc_level;
    if (dt) root["dt"] = *dt;
    if (horizon) root["t"] = *horizon;
    if (!eps.empty()) root["eps"] = eps;
    if (n_paths) root["n_paths"] = *n_paths;
    text = root.dump();
  }

  smallnoise::ParseResult parsed = smallnoise::parse_config(text);
  if (!parsed.config) {
    for (const std::string& err : parsed.errors) {
      std::fprintf(stderr, "config error: %s\n", err.c_str());
    }
    return 2;
  }

  smallnoise::RunConfig cfg = *parsed.config;
  cfg.threads = threads.value_or(1);
  cfg.out_dir = out_dir.value_or(".");
  cfg.assert_thresholds = assert_flag;
  return smallnoise::run(cfg);
}
