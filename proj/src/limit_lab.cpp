#include "flocklab/limit_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <sstream>

#include "flocklab/errors.hpp"

namespace flocklab {

// ---------------------------------------------------------------------------
// Test functions

double TestFunction::time(double t) const {
  if (t >= t_end) return 0.0;
  const double s = 1.0 - t / t_end;
  return s * s * s;
}

double TestFunction::time_derivative(double t) const {
  if (t >= t_end) return 0.0;
  const double s = 1.0 - t / t_end;
  return -3.0 * s * s / t_end;
}

double TestFunction::factor(double s, int degree, double half) {
  const double y = s / half;
  if (std::abs(y) >= 1.0) return 0.0;
  const double c = 1.0 - y * y;
  return std::pow(s, degree) * c * c * c * c;
}

double TestFunction::factor_derivative(double s, int degree, double half) {
  const double y = s / half;
  if (std::abs(y) >= 1.0) return 0.0;
  const double c = 1.0 - y * y;
  const double chi = c * c * c * c;
  const double dchi = -8.0 * y * c * c * c / half;
  const double mono = std::pow(s, degree);
  const double dmono = degree == 0 ? 0.0 : degree * std::pow(s, degree - 1);
  return dmono * chi + mono * dchi;
}

std::vector<TestFunction> make_test_functions(const PhaseGrid& grid, double t_end, int max_degree) {
  if (max_degree < 0) throw InvalidArgument("max_degree must be non-negative");
  if (!(t_end > 0.0)) throw InvalidArgument("test functions need t_end > 0");
  std::vector<TestFunction> out;
  for (int total = 0; total <= max_degree; ++total)
    for (int a = 0; a <= total; ++a)
      out.push_back({a, total - a, t_end, 0.9 * grid.x.half_width, 0.9 * grid.v.half_width});
  return out;
}

// ---------------------------------------------------------------------------
// Mollifier convergence

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw InvalidArgument("fitted_order needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(h[k] > 0.0) || !(err[k] > 0.0)) throw InvalidArgument("fitted_order needs positive data");
    const double lx = std::log(h[k]), ly = std::log(err[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidArgument("fitted_order needs distinct h values");
  return (n * sxy - sx * sy) / denom;
}

MollifierConvergence mollifier_convergence_test(const Profile& profile, const LineGrid& grid,
                                                const Eigen::ArrayXd& rho, const std::vector<double>& r_list) {
  if (rho.size() != grid.cells) throw DomainMismatch("density does not match the grid");
  if (r_list.empty()) throw InvalidArgument("r_list is empty");
  MollifierConvergence out;
  const double r_max = *std::max_element(r_list.begin(), r_list.end());
  const double margin = r_max * make_mollifier(profile, r_max).outer_radius();
  const Eigen::ArrayXd x = grid.centers();
  const Eigen::ArrayXd inside = (x.abs() <= grid.half_width - margin).cast<double>();
  const double dx = grid.spacing();

  for (const double r : r_list) {
    const Mollifier m = make_mollifier(profile, r);
    const Eigen::ArrayXd diff = (convolve(m, grid, rho) - rho).abs() * inside;
    out.r.push_back(r);
    out.gap_l1.push_back(diff.sum() * dx);
    out.gap_linf.push_back(diff.maxCoeff());
  }
  if (r_list.size() >= 2) {
    auto positive = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double e) { return e > 0.0; });
    };
    if (positive(out.gap_l1)) out.order_l1 = fitted_order(out.r, out.gap_l1);
    if (positive(out.gap_linf)) out.order_linf = fitted_order(out.r, out.gap_linf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inequality and identity checks

EnergyCheck energy_inequality_check(const std::vector<DiagnosticsRow>& rows, double c, double tol) {
  EnergyCheck out;
  out.tol = tol;
  out.min_slack = kInfinity;
  auto production = [](const DiagnosticsRow& r) { return -r.d_cs + r.lbound_lhs; };
  for (std::size_t n = 0; n + 1 < rows.size(); ++n) {
    const auto& a = rows[n];
    const auto& b = rows[n + 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) continue;
    const double rate = (b.energy - a.energy) / dt;
    const double slack = c * a.energy - 0.5 * a.d_local - 0.5 * a.d_cs + tol - rate;
    const double defect = std::abs(rate - 0.5 * (production(a) + production(b)));
    if (slack < out.min_slack) {
      out.min_slack = slack;
      if (slack < 0.0) out.worst_step = int(n);
    }
    out.worst_defect = std::max(out.worst_defect, defect);
    if (slack < 0.0) out.pass = false;
  }
  if (out.min_slack == kInfinity) out.min_slack = 0.0;
  return out;
}

double default_tol_scheme(const PhaseGrid& grid, double dt, double energy0) {
  return 10.0 * (grid.dx() + grid.dv() + dt) * energy0;
}

double lp_growth_constant(double mass, const InfluenceKernel& phi) { return 1.0 + mass * phi.sup_norm(); }

LpGrowthCheck lp_growth_check(const std::vector<DiagnosticsRow>& rows, double p, double c, double tol) {
  LpGrowthCheck out;
  if (rows.empty()) return out;
  const bool sup = std::isinf(p);
  auto norm = [sup](const DiagnosticsRow& r) { return sup ? r.linf_f : r.lp_f; };
  const double exponent = sup ? 1.0 : (p - 1.0) / p;
  const double n0 = norm(rows.front());
  const double t0 = rows.front().t;
  for (const auto& row : rows) {
    const double bound = n0 * std::exp(exponent * c * (row.t - t0) * (1.0 + tol));
    const double ratio = bound > 0.0 ? norm(row) / bound : (norm(row) > 0.0 ? kInfinity : 0.0);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
  }
  out.pass = out.worst_ratio <= 1.0 + 1e-12;
  return out;
}

LBoundSides lbound_check(const PhaseDensity& f, const Mollifier& m, const ConfinementPotential& psi) {
  const MomentField mom = weighted_moments(f, m);
  const Moments mo = moments(f);
  const double dx = f.grid.dx();
  LBoundSides out;
  out.lhs = ((mom.u_t * mo.j).sum() - mo.s.sum()) * dx;
  const double d_local = dissipations(f, mom.u_t, make_constant_influence(0.0)).local;
  out.rhs = mt_bound_constant(m) * energy(f, psi) - 0.5 * d_local;
  return out;
}

Eigen::ArrayXXd alignment_divergence(const ForceField& force, const PhaseGrid& grid) {
  const double h = 0.5 * grid.dv();
  Eigen::ArrayXXd div(grid.x.cells, grid.v.cells);
  for (int j = 0; j < grid.v.cells; ++j) {
    const double v = grid.v.center(j);
    for (int i = 0; i < grid.x.cells; ++i)
      div(i, j) = (force.alignment(i, v + h) - force.alignment(i, v - h)) / (2.0 * h);
  }
  return div;
}

double divergence_identity_check(const ForceField& force, const PhaseGrid& grid) {
  const Eigen::ArrayXXd div = alignment_divergence(force, grid);
  double worst = 0.0;
  for (int i = 0; i < grid.x.cells; ++i)
    worst = std::max(worst, (div.row(i) + force.b(i) + force.relax()).abs().maxCoeff());
  return worst;
}

// ---------------------------------------------------------------------------
// Weak formulation

namespace {

struct Factors {
  Eigen::VectorXd x, dx, v, dv, v_v, v_dv;  // X, X', V, V', v V, v V'
};

Factors factors(const TestFunction& phi, const PhaseGrid& grid) {
  const Eigen::ArrayXd xc = grid.x.centers();
  const Eigen::ArrayXd vc = grid.v.centers();
  Factors out;
  out.x = xc.unaryExpr([&](double s) { return phi.space(s); }).matrix();
  out.dx = xc.unaryExpr([&](double s) { return phi.space_derivative(s); }).matrix();
  out.v = vc.unaryExpr([&](double s) { return phi.velocity(s); }).matrix();
  out.dv = vc.unaryExpr([&](double s) { return phi.velocity_derivative(s); }).matrix();
  out.v_v = (vc * out.v.array()).matrix();
  out.v_dv = (vc * out.dv.array()).matrix();
  return out;
}

/// Trapezoid weights over the snapshot times.
std::vector<double> trapezoid_weights(const std::vector<PhaseDensity>& snaps) {
  std::vector<double> w(snaps.size(), 0.0);
  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    const double h = snaps[k + 1].t - snaps[k].t;
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

void require_series(const std::vector<PhaseDensity>& snaps) {
  if (snaps.size() < 3)
    throw InsufficientSnapshots("need at least 3 snapshots, got " + std::to_string(snaps.size()));
  if (std::abs(snaps.front().t) > 1e-14) throw InsufficientSnapshots("first snapshot is not at t = 0");
  for (std::size_t k = 1; k < snaps.size(); ++k) {
    if (!(snaps[k].t > snaps[k - 1].t)) throw InsufficientSnapshots("snapshot times are not increasing");
    if (!(snaps[k].grid == snaps[0].grid)) throw DomainMismatch("snapshots live on different grids");
  }
}

void require_matching(const std::vector<PhaseDensity>& a, const std::vector<PhaseDensity>& b) {
  if (a.size() != b.size()) throw DomainMismatch("snapshot series have different lengths");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a[k].grid == b[k].grid)) throw DomainMismatch("snapshot grids differ");
    if (std::abs(a[k].t - b[k].t) > 1e-9 * std::max(1.0, std::abs(a[k].t)))
      throw DomainMismatch("snapshot times differ");
  }
}

}  // namespace

std::vector<double> weak_residuals(const std::vector<PhaseDensity>& snapshots,
                                   const std::vector<TestFunction>& phis, const KineticModel& model) {
  require_series(snapshots);
  const PhaseGrid& grid = snapshots.front().grid;
  const double vol = grid.cell_volume();
  const std::vector<double> w = trapezoid_weights(snapshots);

  std::vector<Factors> fac;
  fac.reserve(phis.size());
  for (const auto& phi : phis) fac.push_back(factors(phi, grid));

  std::vector<double> res(phis.size(), 0.0);
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const PhaseDensity& s = snapshots[k];
    const ForceField force = force_field(s, model);
    // A = c(x) - d(x) v
    const Eigen::VectorXd c = (-force.grad_psi + force.a + force.relax() * force.u_align).matrix();
    const Eigen::VectorXd d = (force.b + force.relax()).matrix();
    const Eigen::MatrixXd f = s.f.matrix();
    for (std::size_t p = 0; p < phis.size(); ++p) {
      const auto& F = fac[p];
      const double tt = phis[p].time(s.t);
      const double dtt = phis[p].time_derivative(s.t);
      double integrand = dtt * F.x.dot(f * F.v);
      if (tt != 0.0) {
        integrand += tt * F.dx.dot(f * F.v_v);
        integrand += tt * F.x.cwiseProduct(c).dot(f * F.dv);
        integrand -= tt * F.x.cwiseProduct(d).dot(f * F.v_dv);
      }
      res[p] += w[k] * integrand * vol;
    }
  }
  const Eigen::MatrixXd f0 = snapshots.front().f.matrix();
  for (std::size_t p = 0; p < phis.size(); ++p)
    res[p] = std::abs(res[p] + phis[p].time(0.0) * fac[p].x.dot(f0 * fac[p].v) * vol);
  return res;
}

double weak_residual(const std::vector<PhaseDensity>& snapshots, const std::vector<TestFunction>& phis,
                     const KineticModel& model) {
  const auto res = weak_residuals(snapshots, phis, model);
  return res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
}

double product_gap(const std::vector<PhaseDensity>& a, const KineticModel& model_a,
                   const std::vector<PhaseDensity>& b, const KineticModel& model_b,
                   const std::vector<TestFunction>& phis) {
  require_series(a);
  require_matching(a, b);
  const PhaseGrid& grid = a.front().grid;
  const double vol = grid.cell_volume();
  const std::vector<double> w = trapezoid_weights(a);
  std::vector<Factors> fac;
  for (const auto& phi : phis) fac.push_back(factors(phi, grid));

  std::vector<double> acc(phis.size(), 0.0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Eigen::VectorXd ua = force_field(a[k], model_a).u_align.matrix();
    const Eigen::VectorXd ub = force_field(b[k], model_b).u_align.matrix();
    const Eigen::MatrixXd fa = a[k].f.matrix();
    const Eigen::MatrixXd fb = b[k].f.matrix();
    for (std::size_t p = 0; p < phis.size(); ++p) {
      const double tt = phis[p].time(a[k].t);
      if (tt == 0.0) continue;
      const auto& F = fac[p];
      const double diff = F.x.cwiseProduct(ua).dot(fa * F.v) - F.x.cwiseProduct(ub).dot(fb * F.v);
      acc[p] += w[k] * tt * diff * vol;
    }
  }
  double worst = 0.0;
  for (const double v : acc) worst = std::max(worst, std::abs(v));
  return worst;
}

std::pair<double, double> moment_gaps(const std::vector<PhaseDensity>& a, const std::vector<PhaseDensity>& b,
                                      double q) {
  require_matching(a, b);
  double rho_gap = 0.0, j_gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Moments ma = moments(a[k]);
    const Moments mb = moments(b[k]);
    const double dx = a[k].grid.dx();
    rho_gap = std::max(rho_gap, lp_norm(Eigen::ArrayXd(ma.rho - mb.rho), dx, q));
    j_gap = std::max(j_gap, lp_norm(Eigen::ArrayXd(ma.j - mb.j), dx, q));
  }
  return {rho_gap, j_gap};
}

double mt_sup(const std::vector<PhaseDensity>& snapshots, const Mollifier& m) {
  double worst = 0.0;
  for (const auto& s : snapshots) {
    const Moments mo = moments(s);
    if (mo.rho.maxCoeff() <= 0.0) continue;
    worst = std::max(worst, mt_ratio_profile(m, s.grid.x, mo.rho).maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// r -> 0 sweep

namespace {

double largest_step(const std::vector<DiagnosticsRow>& rows) {
  double dt = 0.0;
  for (std::size_t n = 0; n + 1 < rows.size(); ++n) dt = std::max(dt, rows[n + 1].t - rows[n].t);
  return dt;
}

struct Timed {
  KineticRun run;
  double seconds = 0.0;
};

Timed timed_run(const PhaseDensity& f0, const KineticModel& model, const SchemeConfig& scheme) {
  const auto start = std::chrono::steady_clock::now();
  Timed out;
  out.run = run(f0, model, scheme);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

SweepReport r_sweep(const PhaseDensity& f0, const KineticModel& base, const SchemeConfig& scheme,
                    std::vector<double> r_list, const SweepOptions& opts) {
  if (r_list.empty()) throw InvalidArgument("r_list is empty");
  for (const double r : r_list)
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("sweep radii must be positive");
  if (!(opts.q >= 1.0 && opts.q < 1.5)) throw InvalidArgument("sweep exponent q must lie in [1, 3/2)");
  if (scheme.snapshot_stride <= 0.0) throw InvalidArgument("the sweep needs snapshot_stride > 0");
  std::stable_sort(r_list.begin(), r_list.end(), std::greater<>());

  const Mollifier shape = base.mollifier ? *base.mollifier : make_mollifier(ProfileShape::Triangle, r_list.front());
  // Validate resolution up front instead of inside the worker threads.
  std::vector<KineticModel> models;
  for (const double r : r_list) {
    KineticModel m = base;
    m.mode = AlignmentMode::Nonlocal;
    m.mollifier = shape.with_radius(r);
    models.push_back(std::move(m));
  }
  KineticModel local = base;
  local.mode = AlignmentMode::Local;
  local.mollifier.reset();

  auto limit_future = std::async(std::launch::async, timed_run, std::cref(f0), std::cref(local), std::cref(scheme));
  std::vector<std::future<Timed>> futures;
  for (const auto& m : models)
    futures.push_back(std::async(std::launch::async, timed_run, std::cref(f0), std::cref(m), std::cref(scheme)));

  const Timed limit = limit_future.get();
  const auto phis = make_test_functions(f0.grid, limit.run.snapshots.back().t - f0.t, opts.max_degree);
  const double e0 = limit.run.rows.front().energy;

  SweepReport report;
  report.mt_constant = mt_bound_constant(shape);
  report.limit.r = 0.0;
  report.limit.mt_sup = 1.0;
  report.limit.runtime_s = limit.seconds;
  report.limit.energy_margin =
      energy_inequality_check(limit.run.rows, local.alignment_constant(),
                              opts.tol_factor * (f0.grid.dx() + f0.grid.dv() + largest_step(limit.run.rows)) * e0)
          .worst_defect;
  report.limit_weak_residual = weak_residual(limit.run.snapshots, phis, local);

  for (std::size_t k = 0; k < models.size(); ++k) {
    const Timed t = futures[k].get();
    SweepRow row;
    row.r = r_list[k];
    const auto [rho_gap, j_gap] = moment_gaps(t.run.snapshots, limit.run.snapshots, opts.q);
    row.l1_rho_gap = rho_gap;
    row.l1_j_gap = j_gap;
    row.product_gap = product_gap(t.run.snapshots, models[k], limit.run.snapshots, local, phis);
    const double tol = opts.tol_factor * (f0.grid.dx() + f0.grid.dv() + largest_step(t.run.rows)) * e0;
    row.energy_margin = energy_inequality_check(t.run.rows, models[k].alignment_constant(), tol).worst_defect;
    row.mt_sup = mt_sup(t.run.snapshots, *models[k].mollifier);
    row.runtime_s = t.seconds;
    report.rows.push_back(row);
  }
  return report;
}

SweepVerdict sweep_verdict(const SweepReport& report, const SweepCriteria& c) {
  SweepVerdict out;
  auto fail = [&out](const std::string& msg) {
    out.pass = false;
    out.failures.push_back(msg);
  };
  const auto& rows = report.rows;
  if (rows.empty()) {
    fail("no rows");
    return out;
  }
  struct Column {
    const char* name;
    double SweepRow::*field;
    double floor;
    double tol;
  };
  const Column cols[] = {{"l1_rho_gap", &SweepRow::l1_rho_gap, c.floor_rho, c.tol_rho},
                         {"l1_j_gap", &SweepRow::l1_j_gap, c.floor_j, c.tol_j},
                         {"product_gap", &SweepRow::product_gap, c.floor_product, c.tol_product}};
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (!(rows[k].r < rows[k - 1].r)) fail("r is not strictly decreasing at row " + std::to_string(k));

  for (const auto& col : cols) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
      const double prev = rows[k - 1].*col.field;
      const double cur = rows[k].*col.field;
      std::ostringstream where;
      where << col.name << " at r = " << rows[k].r;
      if (cur > prev * (1.0 + c.monotone_slack) && cur > col.floor) fail(where.str() + " increases");
      // Required decrease, scaled to the actual ratio of radii.
      const double halvings = std::log2(rows[k - 1].r / rows[k].r);
      const double need = std::pow(c.decrease_factor, halvings);
      if (cur > col.floor && prev / cur < need) fail(where.str() + " decreases by less than required");
    }
    if (rows.back().*col.field > col.tol) fail(std::string(col.name) + " at the smallest r is above tolerance");
  }
  if (rows.back().product_gap > c.product_vs_residual * report.limit_weak_residual &&
      rows.back().product_gap > c.floor_product)
    fail("product_gap at the smallest r exceeds the limit weak residual bound");
  return out;
}

}  // namespace flocklab
