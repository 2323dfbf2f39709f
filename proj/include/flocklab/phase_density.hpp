#pragma once

#include <limits>

#include <Eigen/Core>

#include "flocklab/grid.hpp"
#include "flocklab/kernels.hpp"

namespace flocklab {

/// Cell averages of f(t, x, v) on a phase grid. Rows index x, columns index v.
struct PhaseDensity {
  PhaseGrid grid;
  Eigen::ArrayXXd f;
  double t = 0.0;

  PhaseDensity() = default;
  PhaseDensity(const PhaseGrid& g, double time = 0.0)
      : grid(g), f(Eigen::ArrayXXd::Zero(g.x.cells, g.v.cells)), t(time) {}

  double mass() const { return f.sum() * grid.cell_volume(); }
};

/// Velocity moments of f on the x-grid: rho, j and S = int v^2 f dv.
struct Moments {
  Eigen::ArrayXd rho;
  Eigen::ArrayXd j;
  Eigen::ArrayXd s;
};

/// rho, j, u together with their K^r-weighted counterparts.
struct MomentField {
  Eigen::ArrayXd rho, j, u;
  Eigen::ArrayXd rho_t, j_t, u_t;
};

/// Psi(x) = kappa |x|^2 / 2 (kappa = 0 gives no confinement).
struct ConfinementPotential {
  double kappa = 0.0;

  double operator()(double x) const { return 0.5 * kappa * x * x; }
  double gradient(double x) const { return kappa * x; }

  bool operator==(const ConfinementPotential&) const = default;
};

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0;
  double momentum = 0.0;
  double energy = 0.0;
  double d_local = 0.0;
  double d_cs = 0.0;
  double linf_f = 0.0;
  double lp_f = 0.0;
  double lbound_lhs = 0.0;
  double lbound_rhs = 0.0;
  double outflow = 0.0;

  bool operator==(const DiagnosticsRow&) const = default;
};

/// Relative vacuum threshold: rho <= kVacuumRelative * max(rho) counts as vacuum.
inline constexpr double kVacuumRelative = 1e-12;

Moments moments(const PhaseDensity& f);

inline double vacuum_floor(const Eigen::ArrayXd& rho) {
  return rho.size() == 0 ? 0.0 : kVacuumRelative * rho.maxCoeff();
}

/// u = j / rho where rho > floor, and 0 elsewhere. Never produces NaN or Inf.
Eigen::ArrayXd bulk_velocity(const Eigen::ArrayXd& rho, const Eigen::ArrayXd& j, double floor);

/// rho_t = K^r * rho, j_t = K^r * j and u_t with the same vacuum rule.
MomentField weighted_moments(const PhaseDensity& f, const Mollifier& m);

/// Moments plus u; the weighted fields are left empty.
MomentField local_moments(const PhaseDensity& f);

/// E = int (v^2 / 2 + Psi(x)) f dv dx.
double energy(const PhaseDensity& f, const ConfinementPotential& psi);

/// Kinetic part int v^2 / 2 f.
double kinetic_energy(const PhaseDensity& f);

struct Dissipations {
  double local = 0.0;  // int f |u - v|^2
  double cs = 0.0;     // (1/2) int Phi(x - y) f(x, v) f(y, w) |w - v|^2
};

/// D_CS is reduced to spatial convolutions of rho, j and S, which is
/// O(Nx^2) rather than O((Nx Nv)^2).
Dissipations dissipations(const PhaseDensity& f, const Eigen::ArrayXd& u, const InfluenceKernel& phi);

/// Brute-force four-fold sum for D_CS. Only for tiny grids.
double cs_dissipation_direct(const PhaseDensity& f, const InfluenceKernel& phi);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Quadrature L^p norm of f; p = infinity returns the largest cell average.
double lp_norm(const PhaseDensity& f, double p);

/// L^p norm of a grid function on the x-grid.
double lp_norm(const Eigen::ArrayXd& g, double dx, double p);

/// Upper bounds for ||rho||_p and ||j||_q obtained from ||f||_inf, the
/// second velocity moment and the mass by splitting the velocity integral at
/// an optimal radius. Valid for p in [1, 3] and q in [1, 3/2] (d = 1); the
/// bounds include the discretisation term from the velocity cell width.
struct MomentBounds {
  double rho = 0.0;
  double j = 0.0;
};
MomentBounds moment_lp_bounds(double linf_f, double second_moment, double mass, double p_rho, double q_j,
                              const PhaseGrid& grid);

}  // namespace flocklab
