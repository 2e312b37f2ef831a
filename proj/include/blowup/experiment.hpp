#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blowup/model.hpp"
#include "blowup/physical.hpp"
#include "blowup/selfsim_solver.hpp"
#include "blowup/shooting.hpp"
#include "blowup/trapset.hpp"

namespace blowup {

enum class ExperimentKind {
  SpectralChecks,
  SemigroupChecks,
  Trajectory,
  Shoot,
  Physical,
  Stability,
  FullPipeline,
};

std::string_view kind_name(ExperimentKind k);
ExperimentKind parse_kind(std::string_view name);

/// Config problem tied to one key ("section.key").
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& why)
      : std::runtime_error(key.empty() ? why : key + ": " + why), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::FullPipeline;
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  double p = 2.0, alpha = 0.0, alpha_bar = 0.0, mu = 0.0, mu_bar = 0.0, mu0 = 0.0;

  double ds = 0.01;
  Scheme scheme = Scheme::SemigroupSplit;
  BoundaryCondition bc = BoundaryCondition::Extrapolation;
  double dy = 0.05;
  double y_max = 0.0;  ///< 0: wide enough for K0 and s0 + window

  double A = 8.0;
  double K0 = 4.0;

  double s0 = 20.0;
  double window = 30.0;
  int max_levels = 64;
  double sign_floor = 1e-6;
  int witness_n = 7;

  double d0 = 0.0;  ///< initial data for the trajectory, physical and stability kinds
  double d1 = 0.0;

  double domain_scale = 10.0;  ///< physical half width in units of sqrt(T |log T|)
  std::size_t half_count = 1000;
  double dt0 = 1e-3;
  double lambda = 0.01;
  double threshold = 1e16;
  double t_budget = 1.0;
  double y_window = 20.0;

  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  double offset = 0.3;  ///< offset bump centre, in units of sqrt(T |log T|)
  double width = 1.0;   ///< bump width, same units
};

/// Reads an INI file (missing keys keep their defaults), then applies
/// "section.key=value" overrides. Unknown sections or keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {});

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& cfg);

/// Every setting as "section.key = value", sorted, one per line. out_dir is left out.
std::string canonical_text(const ExperimentConfig& cfg);
/// SHA-256 of canonical_text, lower-case hex.
std::string config_hash(const ExperimentConfig& cfg);

ModelParams model_params(const ExperimentConfig& cfg);
TrapParams trap_params(const ExperimentConfig& cfg);
SolverConfig solver_config(const ExperimentConfig& cfg);
PhysicalConfig physical_config(const ExperimentConfig& cfg);
ShootOptions shoot_options(const ExperimentConfig& cfg, int threads);

struct CheckOutcome {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double limit = 0.0;
  std::string detail;
};

enum class ExitStatus { Pass = 0, CheckFailure = 1, ConfigFailure = 2, Divergence = 3 };

struct ExperimentOutcome {
  ExitStatus status = ExitStatus::Pass;
  std::vector<CheckOutcome> checks;
  std::vector<std::string> files;  ///< relative to the output directory
  std::string message;
};

/// Runs the configured experiment and writes report.json, CSV files and a
/// MANIFEST into out_dir. Outputs depend only on the config.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 int threads = 1);

}  // namespace blowup
