#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "flocklab/initial_data.hpp"
#include "flocklab/kernels.hpp"
#include "flocklab/kinetic_solver.hpp"
#include "flocklab/limit_lab.hpp"
#include "flocklab/particle_solver.hpp"

namespace flocklab {

struct KernelConfig {
  std::string profile = "triangle";  // triangle | bump2 | cosine | table
  std::string profile_file;          // radial CSV, required for profile = table
  double r = 0.05;                   // 0 selects local alignment
  std::string alignment = "mt";      // mt | off
  std::string influence = "algebraic";
  double lambda = 1.0;
  double beta = 1.0;
  bool operator==(const KernelConfig&) const = default;
};

struct GridConfig {
  double Lx = 0.8;
  double Lv = 1.5;
  int Nx = 128;
  int Nv = 128;
  bool operator==(const GridConfig&) const = default;
};

struct TimeConfig {
  double t_end = 1.0;
  double cfl = 0.4;
  double snapshot_stride = 0.1;
  std::string limiter = "minmod";
  double lp = 2.0;
  bool operator==(const TimeConfig&) const = default;
};

struct ParticlesConfig {
  int n = 1000;
  std::uint64_t seed = 1;
  int dim = 1;
  double dt = 0.01;
  int width = 2;  // deposit half-width in cells
  bool operator==(const ParticlesConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> r_list{0.4, 0.2, 0.1, 0.05};
  double q = 1.0;
  double tol_rho = kInfinity;
  double tol_j = kInfinity;
  double tol_product = kInfinity;
  double floor_rho = 0.0;
  double floor_j = 0.0;
  double floor_product = 0.0;
  double decrease_factor = 1.3;
  int max_degree = 4;
  double tol_scheme_factor = 10.0;
  bool operator==(const SweepConfig&) const = default;
};

struct RunConfig {
  KernelConfig kernel;
  ConfinementPotential potential{1.0};
  GridConfig grid;
  TimeConfig time;
  InitialData init;
  ParticlesConfig particles;
  SweepConfig sweep;
  /// Directory relative paths inside the file are resolved against.
  std::filesystem::path base_dir;

  bool operator==(const RunConfig& o) const {
    return kernel == o.kernel && potential == o.potential && grid == o.grid && time == o.time &&
           init == o.init && particles == o.particles && sweep == o.sweep;
  }
};

/// Parses `[section]` headers and `key = value` lines; '#' starts a comment.
/// Missing keys keep their defaults. Throws ParseError, UnknownKey or
/// ValidationError for the first problem found.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Every key, in a form parse_config reads back to an equal config.
std::string serialize_config(const RunConfig& cfg);

/// Throws ValidationError naming the offending key.
void validate(const RunConfig& cfg);

// Builders from a validated config.
PhaseGrid make_grid(const RunConfig& cfg);
InfluenceKernel make_influence(const RunConfig& cfg);
Profile make_profile(const RunConfig& cfg);
KineticModel make_kinetic_model(const RunConfig& cfg);
ParticleModel make_particle_model(const RunConfig& cfg);
SchemeConfig make_scheme(const RunConfig& cfg);
SweepCriteria make_criteria(const RunConfig& cfg);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace flocklab
