#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "flocklab/kernels.hpp"
#include "flocklab/kinetic_solver.hpp"
#include "flocklab/phase_density.hpp"

namespace flocklab {

// ---------------------------------------------------------------------------
// Test functions

/// phi(t, x, v) = T(t) X(x) V(v) with T(t) = (1 - t/t_end)^3,
/// X(x) = x^deg_x chi(x / half_x), V(v) = v^deg_v chi(v / half_v) and the
/// cutoff chi(s) = (1 - s^2)^4 on |s| < 1.
struct TestFunction {
  int deg_x = 0;
  int deg_v = 0;
  double t_end = 1.0;
  double half_x = 1.0;
  double half_v = 1.0;

  double time(double t) const;
  double time_derivative(double t) const;
  double space(double x) const { return factor(x, deg_x, half_x); }
  double space_derivative(double x) const { return factor_derivative(x, deg_x, half_x); }
  double velocity(double v) const { return factor(v, deg_v, half_v); }
  double velocity_derivative(double v) const { return factor_derivative(v, deg_v, half_v); }
  double operator()(double t, double x, double v) const { return time(t) * space(x) * velocity(v); }

  static double factor(double s, int degree, double half);
  static double factor_derivative(double s, int degree, double half);
};

/// All (deg_x, deg_v) with deg_x + deg_v <= max_degree, cut off at 90% of
/// the phase domain.
std::vector<TestFunction> make_test_functions(const PhaseGrid& grid, double t_end, int max_degree = 4);

// ---------------------------------------------------------------------------
// Mollifier convergence

struct MollifierConvergence {
  std::vector<double> r;
  std::vector<double> gap_l1;
  std::vector<double> gap_linf;
  double order_l1 = 0.0;
  double order_linf = 0.0;
};

/// ||K^r * rho - rho|| for each r, measured on cells further than
/// max(r) R2 from the domain boundary, with least-squares fitted orders.
MollifierConvergence mollifier_convergence_test(const Profile& profile, const LineGrid& grid,
                                                const Eigen::ArrayXd& rho, const std::vector<double>& r_list);

/// Least-squares slope of log(err) against log(h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& err);

// ---------------------------------------------------------------------------
// Inequality and identity checks

struct EnergyCheck {
  bool pass = true;
  double worst_defect = 0.0;  // max |dE/dt - exact energy production|, absorbed by tol_scheme
  double min_slack = 0.0;     // min of C E - D_local/2 - D_CS/2 + tol - dE/dt
  double tol = 0.0;
  int worst_step = -1;
};

/// Checks (E(t+dt) - E(t)) / dt <= C E - D_local/2 - D_CS/2 + tol on every
/// step. The defect compares the discrete rate with the trapezoidal average
/// of the exact production rate -D_CS + int f v (u_align - v).
EnergyCheck energy_inequality_check(const std::vector<DiagnosticsRow>& rows, double c, double tol);

/// 10 (dx + dv + dt) E(0).
double default_tol_scheme(const PhaseGrid& grid, double dt, double energy0);

/// d (1 + M ||Phi||_inf) with d = 1.
double lp_growth_constant(double mass, const InfluenceKernel& phi);

struct LpGrowthCheck {
  bool pass = true;
  double worst_ratio = 0.0;  // max ||f(t)||_p / bound(t)
};

/// ||f(t)||_p <= ||f0||_p exp((p-1)/p C t (1 + tol)); p = inf reads the
/// linf_f column, any other p reads lp_f.
LpGrowthCheck lp_growth_check(const std::vector<DiagnosticsRow>& rows, double p, double c, double tol = 0.05);

struct LBoundSides {
  double lhs = 0.0;  // int f v (u_t - v)
  double rhs = 0.0;  // C E - D_local / 2
};

LBoundSides lbound_check(const PhaseDensity& f, const Mollifier& m, const ConfinementPotential& psi);

/// Central-difference v-divergence of the alignment part of the field at
/// every cell centre.
Eigen::ArrayXXd alignment_divergence(const ForceField& force, const PhaseGrid& grid);

/// max |div_v (alignment) + b(x) + relax| over the grid.
double divergence_identity_check(const ForceField& force, const PhaseGrid& grid);

// ---------------------------------------------------------------------------
// Weak formulation

/// Residual of the weak form for each test function; snapshots must start
/// at t = 0, and the test functions vanish at the last snapshot time.
std::vector<double> weak_residuals(const std::vector<PhaseDensity>& snapshots,
                                   const std::vector<TestFunction>& phis, const KineticModel& model);
double weak_residual(const std::vector<PhaseDensity>& snapshots, const std::vector<TestFunction>& phis,
                     const KineticModel& model);

/// max over phi of |int_0^T int (f^a u^a - f^b u^b) phi|, with u the
/// velocity each model aligns toward.
double product_gap(const std::vector<PhaseDensity>& a, const KineticModel& model_a,
                   const std::vector<PhaseDensity>& b, const KineticModel& model_b,
                   const std::vector<TestFunction>& phis);

/// sup over snapshots of ||rho^a - rho^b||_q and ||j^a - j^b||_q.
std::pair<double, double> moment_gaps(const std::vector<PhaseDensity>& a, const std::vector<PhaseDensity>& b,
                                      double q);

/// max over snapshots and y of the Motsch-Tadmor ratio integral.
double mt_sup(const std::vector<PhaseDensity>& snapshots, const Mollifier& m);

// ---------------------------------------------------------------------------
// r -> 0 sweep

struct SweepRow {
  double r = 0.0;
  double l1_rho_gap = 0.0;
  double l1_j_gap = 0.0;
  double product_gap = 0.0;
  double energy_margin = 0.0;
  double mt_sup = 0.0;
  double runtime_s = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;       // r > 0, in decreasing order
  SweepRow limit;                   // the r = 0 reference run
  double limit_weak_residual = 0.0; // weak residual of the r = 0 run
  double mt_constant = 0.0;         // r-independent Motsch-Tadmor constant
};

struct SweepOptions {
  double q = 1.0;
  int max_degree = 4;
  double tol_factor = 10.0;  // tol_scheme = tol_factor (dx + dv + dt) E(0)
};

/// Runs the local (r = 0) model and the nonlocal model for each r > 0 in
/// `r_list` on the same data and grid; runs execute concurrently.
SweepReport r_sweep(const PhaseDensity& f0, const KineticModel& base, const SchemeConfig& scheme,
                    std::vector<double> r_list, const SweepOptions& opts = {});

struct SweepCriteria {
  double decrease_factor = 1.3;   // required gap ratio per halving of r
  double monotone_slack = 0.05;   // tolerated increase between neighbouring rows
  double floor_rho = 0.0;         // gaps at or below these are at the grid floor
  double floor_j = 0.0;
  double floor_product = 0.0;
  double tol_rho = kInfinity;     // smallest-r row must be below these
  double tol_j = kInfinity;
  double tol_product = kInfinity;
  double product_vs_residual = 3.0;
};

struct SweepVerdict {
  bool pass = true;
  std::vector<std::string> failures;
};

SweepVerdict sweep_verdict(const SweepReport& report, const SweepCriteria& criteria);

}  // namespace flocklab
