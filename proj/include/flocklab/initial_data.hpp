#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "flocklab/grid.hpp"
#include "flocklab/particle_solver.hpp"
#include "flocklab/phase_density.hpp"

namespace flocklab {

/// Compactly supported initial data built from cos^2 bumps
///   c(s; w) = cos^2(pi s / (2 w)) for |s| < w,
/// each bump carrying mass m_k at (x_k, v_k): f = sum_k m_k/(wx wv) c(x - x_k; wx) c(v - v_k; wv).
struct InitialData {
  enum class Kind { Bump, TwoBump };

  Kind kind = Kind::TwoBump;
  double x1 = -0.35, v1 = 0.4, m1 = 0.5;
  double x2 = 0.35, v2 = -0.4, m2 = 0.5;
  double wx = 0.25, wv = 0.3;

  double operator()(double x, double v) const;
  double total_mass() const { return kind == Kind::Bump ? m1 : m1 + m2; }

  bool operator==(const InitialData&) const = default;
};

InitialData::Kind parse_init_kind(std::string_view name);
std::string to_string(InitialData::Kind kind);

/// One-dimensional cos^2 bump profile with unit integral.
double cos2_bump(double s, double width);

/// Point values at cell centres.
PhaseDensity sample_density(const InitialData& init, const PhaseGrid& grid);

/// Exact free-transport solution f(t, x, v) = f0(x - v t, v) at cell centres.
PhaseDensity free_transport_solution(const InitialData& init, const PhaseGrid& grid, double t);

/// n equal-mass particles drawn from f0 by rejection sampling. For dim = 2
/// the second coordinate of position and velocity is drawn from centred
/// bumps of widths wx and wv.
ParticleEnsemble sample_particles(const InitialData& init, int n, std::uint64_t seed, int dim = 1);

}  // namespace flocklab
