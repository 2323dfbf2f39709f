#include "flocklab/kinetic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flocklab/errors.hpp"

namespace flocklab {

Limiter parse_limiter(std::string_view name) {
  if (name == "none") return Limiter::None;
  if (name == "minmod") return Limiter::Minmod;
  throw InvalidArgument("unknown flux limiter '" + std::string(name) + "'");
}

std::string to_string(Limiter limiter) { return limiter == Limiter::None ? "none" : "minmod"; }

double KineticModel::alignment_constant() const {
  switch (mode) {
    case AlignmentMode::Off: return 0.0;
    case AlignmentMode::Local: return 1.0;
    case AlignmentMode::Nonlocal: return mollifier ? mt_bound_constant(*mollifier) : 0.0;
  }
  return 0.0;
}

double max_stable_courant(Limiter limiter) { return limiter == Limiter::None ? 1.0 : 2.0 / 3.0; }

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

/// Upwind fluxes at the n + 1 faces of a line of n cells, with zero ghost
/// cells on both sides. `speed(k)` is the velocity at face k.
template <typename Speed>
void line_fluxes(const Eigen::ArrayXd& q, Speed&& speed, Limiter limiter, Eigen::ArrayXd& flux,
                 Eigen::ArrayXd& slope) {
  const int n = int(q.size());
  slope.resize(n);
  flux.resize(n + 1);
  if (limiter == Limiter::Minmod) {
    for (int k = 0; k < n; ++k) {
      const double left = k > 0 ? q(k - 1) : 0.0;
      const double right = k + 1 < n ? q(k + 1) : 0.0;
      slope(k) = minmod(q(k) - left, right - q(k));
    }
  } else {
    slope.setZero();
  }
  for (int k = 0; k <= n; ++k) {
    const double s = speed(k);
    if (s > 0.0) {
      flux(k) = k > 0 ? s * (q(k - 1) + 0.5 * slope(k - 1)) : 0.0;
    } else {
      flux(k) = k < n ? s * (q(k) - 0.5 * slope(k)) : 0.0;
    }
  }
}

double max_abs_acceleration(const PhaseGrid& grid, const ForceField& force) {
  const double lo = -grid.v.half_width, hi = grid.v.half_width;
  double amax = 0.0;
  for (int i = 0; i < grid.x.cells; ++i)
    amax = std::max({amax, std::abs(force(i, lo)), std::abs(force(i, hi))});
  return amax;
}

double max_speed(const PhaseGrid& grid) { return grid.v.half_width - 0.5 * grid.dv(); }

/// x-transport of every v-column over `tau`.
void transport_x(PhaseDensity& f, double tau, Limiter limiter, double& outflow) {
  const auto& g = f.grid;
  const double ratio = tau / g.dx();
  Eigen::ArrayXd q, flux, slope;
  for (int j = 0; j < g.v.cells; ++j) {
    const double vj = g.v.center(j);
    q = f.f.col(j);
    line_fluxes(q, [vj](int) { return vj; }, limiter, flux, slope);
    f.f.col(j) = q - ratio * (flux.tail(g.x.cells) - flux.head(g.x.cells));
    outflow += (flux(g.x.cells) - flux(0)) * tau * g.dv();
  }
}

/// v-transport of every x-row over `tau` under the frozen force.
void transport_v(PhaseDensity& f, const ForceField& force, double tau, Limiter limiter, double& outflow) {
  const auto& g = f.grid;
  const double ratio = tau / g.dv();
  const Eigen::ArrayXd vf = g.v.faces();
  Eigen::ArrayXd q, flux, slope;
  for (int i = 0; i < g.x.cells; ++i) {
    q = f.f.row(i).transpose();
    line_fluxes(q, [&](int k) { return force(i, vf(k)); }, limiter, flux, slope);
    f.f.row(i) = (q - ratio * (flux.tail(g.v.cells) - flux.head(g.v.cells))).transpose();
    outflow += (flux(g.v.cells) - flux(0)) * tau * g.dx();
  }
}

}  // namespace

ForceField force_field(const PhaseDensity& f, const KineticModel& model, MomentField* moments_out) {
  const auto& g = f.grid;
  if (model.mode == AlignmentMode::Nonlocal && !model.mollifier)
    throw InvalidArgument("nonlocal alignment needs a mollifier");

  MomentField mom = model.mode == AlignmentMode::Nonlocal ? weighted_moments(f, *model.mollifier) : local_moments(f);

  ForceField force;
  force.mode = model.mode;
  force.grad_psi = model.psi.kappa * g.x.centers();
  if (model.phi.lambda() != 0.0) {
    force.a = convolve(model.phi, g.x, mom.j);
    force.b = convolve(model.phi, g.x, mom.rho);
  } else {
    force.a = force.b = Eigen::ArrayXd::Zero(g.x.cells);
  }
  switch (model.mode) {
    case AlignmentMode::Off: force.u_align = Eigen::ArrayXd::Zero(g.x.cells); break;
    case AlignmentMode::Local: force.u_align = mom.u; break;
    case AlignmentMode::Nonlocal: force.u_align = mom.u_t; break;
  }
  if (moments_out) *moments_out = std::move(mom);
  return force;
}

double stable_dt(const PhaseGrid& grid, const ForceField& force, double cfl) {
  double dt = grid.dx() / max_speed(grid);
  const double amax = max_abs_acceleration(grid, force);
  if (amax > 0.0) dt = std::min(dt, grid.dv() / amax);
  return cfl * dt;
}

Eigen::ArrayXXd transport_rhs(const PhaseDensity& f, const ForceField& force, Limiter limiter) {
  const auto& g = f.grid;
  Eigen::ArrayXXd rhs(g.x.cells, g.v.cells);
  Eigen::ArrayXd q, flux, slope;
  for (int j = 0; j < g.v.cells; ++j) {
    const double vj = g.v.center(j);
    q = f.f.col(j);
    line_fluxes(q, [vj](int) { return vj; }, limiter, flux, slope);
    rhs.col(j) = -(flux.tail(g.x.cells) - flux.head(g.x.cells)) / g.dx();
  }
  const Eigen::ArrayXd vf = g.v.faces();
  for (int i = 0; i < g.x.cells; ++i) {
    q = f.f.row(i).transpose();
    line_fluxes(q, [&](int k) { return force(i, vf(k)); }, limiter, flux, slope);
    rhs.row(i) -= ((flux.tail(g.v.cells) - flux.head(g.v.cells)) / g.dv()).transpose();
  }
  return rhs;
}

void advance(PhaseDensity& f, const ForceField& force, double dt, Limiter limiter, double& outflow) {
  const auto& g = f.grid;
  const double limit = max_stable_courant(limiter) * (1.0 + 1e-12);
  const double courant_x = 0.5 * dt * max_speed(g) / g.dx();
  const double courant_v = dt * max_abs_acceleration(g, force) / g.dv();
  if (!(dt > 0.0) || courant_x > limit || courant_v > limit)
    throw CFLViolation("dt = " + std::to_string(dt) + " gives Courant numbers (" + std::to_string(courant_x) +
                       ", " + std::to_string(courant_v) + ") above " + std::to_string(limit));

  transport_x(f, 0.5 * dt, limiter, outflow);
  transport_v(f, force, dt, limiter, outflow);
  transport_x(f, 0.5 * dt, limiter, outflow);
  f.t += dt;

  if (f.f.size() > 0 && f.f.minCoeff() < 0.0)
    throw NegativeDensity("negative cell average " + std::to_string(f.f.minCoeff()) + " at t = " +
                          std::to_string(f.t));
}

DiagnosticsRow kinetic_diagnostics(const PhaseDensity& f, const KineticModel& model, const ForceField& force,
                                   const MomentField& mom, double lp, double outflow) {
  const auto& g = f.grid;
  const double dx = g.dx();
  DiagnosticsRow row;
  row.t = f.t;
  row.mass = f.mass();
  row.momentum = mom.j.sum() * dx;
  row.energy = energy(f, model.psi);
  const Dissipations d = dissipations(f, force.u_align, model.phi);
  row.d_cs = d.cs;
  row.linf_f = lp_norm(f, kInfinity);
  row.lp_f = lp_norm(f, lp);
  row.outflow = outflow;
  if (model.mode != AlignmentMode::Off) {
    row.d_local = d.local;
    // int f v (u_align - v) = int (u_align j - S) dx
    const Moments m = moments(f);
    row.lbound_lhs = ((force.u_align * m.j).sum() - m.s.sum()) * dx;
    row.lbound_rhs = model.alignment_constant() * row.energy - 0.5 * row.d_local;
  }
  return row;
}

StepResult step(const PhaseDensity& f, const KineticModel& model, const SchemeConfig& cfg, double dt_cap,
                double& outflow) {
  StepResult out;
  MomentField mom;
  out.force = force_field(f, model, &mom);
  out.row = kinetic_diagnostics(f, model, out.force, mom, cfg.lp, outflow);
  out.dt = std::min(stable_dt(f.grid, out.force, cfg.cfl), dt_cap);
  out.f = f;
  advance(out.f, out.force, out.dt, cfg.limiter, outflow);
  return out;
}

KineticRun run(const PhaseDensity& f0, const KineticModel& model, const SchemeConfig& cfg, const RunHooks& hooks) {
  if (!(cfg.t_end > f0.t)) throw InvalidArgument("t_end must exceed the initial time");
  if (!(cfg.cfl > 0.0) || cfg.cfl > max_stable_courant(cfg.limiter))
    throw InvalidArgument("cfl must lie in (0, " + std::to_string(max_stable_courant(cfg.limiter)) + "]");

  std::vector<double> targets;
  if (cfg.snapshot_stride > 0.0) {
    for (int k = 1;; ++k) {
      const double tk = f0.t + k * cfg.snapshot_stride;
      if (tk >= cfg.t_end - 1e-12 * cfg.t_end) break;
      targets.push_back(tk);
    }
  }
  targets.push_back(cfg.t_end);

  KineticRun result;
  const double mass0 = f0.mass();
  auto emit_row = [&](const DiagnosticsRow& row) {
    result.rows.push_back(row);
    if (hooks.on_row) hooks.on_row(row);
  };
  auto emit_snapshot = [&](const PhaseDensity& f) {
    result.snapshots.push_back(f);
    if (hooks.on_snapshot) hooks.on_snapshot(f);
  };

  PhaseDensity f = f0;
  emit_snapshot(f);
  double outflow = 0.0;
  for (const double target : targets) {
    while (f.t < target) {
      MomentField mom;
      const ForceField force = force_field(f, model, &mom);
      emit_row(kinetic_diagnostics(f, model, force, mom, cfg.lp, outflow));
      const double dt_cfl = stable_dt(f.grid, force, cfg.cfl);
      const bool lands = target - f.t <= dt_cfl * (1.0 + 1e-12);
      advance(f, force, lands ? target - f.t : dt_cfl, cfg.limiter, outflow);
      if (lands) f.t = target;
      if (mass0 > 0.0 && outflow > cfg.max_mass_loss * mass0)
        throw MassLossExceeded("boundary outflow " + std::to_string(outflow / mass0) +
                               " of the initial mass exceeds the limit at t = " + std::to_string(f.t));
    }
    emit_snapshot(f);
  }
  MomentField mom;
  const ForceField force = force_field(f, model, &mom);
  emit_row(kinetic_diagnostics(f, model, force, mom, cfg.lp, outflow));
  result.outflow = outflow;
  return result;
}

}  // namespace flocklab
