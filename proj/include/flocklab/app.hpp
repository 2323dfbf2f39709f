#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flocklab/config.hpp"
#include "flocklab/kinetic_solver.hpp"

namespace flocklab {

struct CheckResult {
  std::string name;
  bool pass = true;
  double value = 0.0;  // measured quantity
  double limit = 0.0;  // bound it is compared against
};

/// Energy, L^inf and L^p growth, L-bound, divergence identity, MT constant and
/// mass balance on one kinetic run, plus the weak residual for reference.
std::vector<CheckResult> run_checks(const RunConfig& cfg, const KineticRun& run);

std::string check_csv(const std::vector<CheckResult>& checks);

/// 64-bit FNV-1a of the serialized config, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

// Subcommands. Each returns the process exit status (0 ok, 1 check failure)
// and throws flocklab::Error on configuration or runtime problems.
int cmd_kinetic(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_particles(const RunConfig& cfg, const std::filesystem::path& out);
int cmd_sweep(const RunConfig& cfg, const std::optional<std::vector<double>>& r_list,
              const std::filesystem::path& out);
int cmd_check(const RunConfig& cfg, const std::optional<std::filesystem::path>& out);

/// Exit status for an error kind: 2 for usage and configuration problems,
/// 3 for runtime aborts.
int exit_code_for(const std::string& kind);

}  // namespace flocklab
