#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "flocklab/kernels.hpp"
#include "flocklab/phase_density.hpp"

namespace flocklab {

/// Which alignment term drives relaxation toward a local velocity.
enum class AlignmentMode {
  Off,       // Cucker-Smale and confinement only
  Nonlocal,  // Motsch-Tadmor with K^r, relaxes toward u_t (r > 0)
  Local,     // strong local alignment, relaxes toward u (r = 0)
};

enum class Limiter { None, Minmod };

Limiter parse_limiter(std::string_view name);
std::string to_string(Limiter limiter);

struct KineticModel {
  InfluenceKernel phi;
  std::optional<Mollifier> mollifier;  // required for AlignmentMode::Nonlocal
  AlignmentMode mode = AlignmentMode::Nonlocal;
  ConfinementPotential psi;

  /// Constant C in int f v L[f] <= C E - D_local / 2: the Motsch-Tadmor
  /// bound for r > 0, 1 for local alignment, 0 without alignment.
  double alignment_constant() const;
};

/// Total acceleration A(x_i, v) = -grad Psi(x_i) + a_i - b_i v + relax (u_i - v)
/// with a = Phi * j, b = Phi * rho and relax = 1 when alignment is on.
struct ForceField {
  Eigen::ArrayXd grad_psi;
  Eigen::ArrayXd a;
  Eigen::ArrayXd b;
  Eigen::ArrayXd u_align;
  AlignmentMode mode = AlignmentMode::Off;

  double relax() const { return mode == AlignmentMode::Off ? 0.0 : 1.0; }
  double operator()(int i, double v) const { return -grad_psi(i) + alignment(i, v); }
  /// Cucker-Smale plus alignment part only.
  double alignment(int i, double v) const { return a(i) - b(i) * v + relax() * (u_align(i) - v); }
};

/// Builds the frozen force field from f. Moments are returned through
/// `moments_out` when given, so diagnostics can reuse them.
ForceField force_field(const PhaseDensity& f, const KineticModel& model, MomentField* moments_out = nullptr);

struct SchemeConfig {
  double cfl = 0.4;
  Limiter limiter = Limiter::Minmod;
  double t_end = 1.0;
  double snapshot_stride = 0.0;  // time between snapshots; 0 keeps only t = 0 and t_end
  double lp = 2.0;               // exponent of the lp_f diagnostic
  double max_mass_loss = 1e-6;   // relative boundary outflow that aborts a run
};

/// Largest Courant number for which the scheme stays positive.
double max_stable_courant(Limiter limiter);

/// cfl * min(dx / v_max, dv / A_max).
double stable_dt(const PhaseGrid& grid, const ForceField& force, double cfl);

/// Semi-discrete right-hand side -D_x(v f) - D_v(A f) with the same limited
/// upwind fluxes used by `advance`.
Eigen::ArrayXXd transport_rhs(const PhaseDensity& f, const ForceField& force, Limiter limiter);

/// Strang step under a frozen force: x-transport dt/2, v-transport dt,
/// x-transport dt/2. Adds the mass leaving through the boundary to
/// `outflow`. Throws CFLViolation or NegativeDensity.
void advance(PhaseDensity& f, const ForceField& force, double dt, Limiter limiter, double& outflow);

/// Diagnostics at the state `f`, reusing the moments of a force evaluation.
DiagnosticsRow kinetic_diagnostics(const PhaseDensity& f, const KineticModel& model, const ForceField& force,
                                   const MomentField& mom, double lp, double outflow);

struct StepResult {
  PhaseDensity f;
  ForceField force;
  DiagnosticsRow row;  // diagnostics of the pre-step state
  double dt = 0.0;
};

/// One step: computes the force from f, chooses dt (capped by `dt_cap`) and advances.
StepResult step(const PhaseDensity& f, const KineticModel& model, const SchemeConfig& cfg, double dt_cap,
                double& outflow);

struct KineticRun {
  std::vector<DiagnosticsRow> rows;
  std::vector<PhaseDensity> snapshots;
  double outflow = 0.0;
};

struct RunHooks {
  std::function<void(const DiagnosticsRow&)> on_row;
  std::function<void(const PhaseDensity&)> on_snapshot;
};

/// Integrates to cfg.t_end. Diagnostics are emitted for every step and for
/// the final state; time steps are shortened to land exactly on snapshot
/// times. Throws MassLossExceeded when the outflow exceeds cfg.max_mass_loss.
KineticRun run(const PhaseDensity& f0, const KineticModel& model, const SchemeConfig& cfg,
               const RunHooks& hooks = {});

}  // namespace flocklab
