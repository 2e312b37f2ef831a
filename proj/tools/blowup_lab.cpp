#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "blowup/experiment.hpp"
#include "blowup/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Blow-up profile experiments for a semilinear heat equation with gradient term"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string kind;
  std::vector<std::string> overrides;

  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "INI config file")->required();
  run->add_option("--out", out_dir, "Output directory (default: experiment.out_dir from the config)");
  run->add_option("--kind", kind, "Override experiment.kind");
  run->add_option("--override", overrides, "section.key=value, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  blowup::ExperimentConfig cfg;
  try {
    if (!kind.empty()) overrides.push_back("experiment.kind=" + kind);
    if (!out_dir.empty()) overrides.push_back("experiment.out_dir=" + out_dir);
    cfg = blowup::load_config(config_path, overrides);
  } catch (const blowup::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  }

  const int threads = blowup::threads_from_env();
  blowup::ExperimentOutcome out;
  try {
    out = blowup::run_experiment(cfg, cfg.out_dir, threads);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  for (const auto& c : out.checks) {
    fmt::print("{} {:<28} measured={:.6g} limit={:.6g}\n", c.passed ? "PASS" : "FAIL", c.name,
               c.measured, c.limit);
  }
  if (!out.message.empty()) fmt::print("{}\n", out.message);
  fmt::print("{} files written to {}\n", out.files.size(), cfg.out_dir);
  return static_cast<int>(out.status);
}
