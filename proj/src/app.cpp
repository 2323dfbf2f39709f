#include "flocklab/app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flocklab/csv.hpp"
#include "flocklab/errors.hpp"
#include "flocklab/initial_data.hpp"
#include "flocklab/limit_lab.hpp"

#ifndef FLOCKLAB_VERSION
#define FLOCKLAB_VERSION "unknown"
#endif

namespace flocklab {

namespace fs = std::filesystem;

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : serialize_config(cfg)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

namespace {

using Clock = std::chrono::steady_clock;

void prepare(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw InvalidArgument("cannot create output directory '" + out.string() + "': " + ec.message());
}

void write_manifest(const fs::path& out, const std::string& command, const RunConfig& cfg, Clock::time_point start,
                    const std::vector<std::string>& files) {
  nlohmann::ordered_json j;
  j["tool"] = "flocklab";
  j["version"] = FLOCKLAB_VERSION;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.particles.seed;
  j["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  j["outputs"] = files;
  j["config"] = serialize_config(cfg);
  write_atomic(out / "manifest.json", j.dump(2) + "\n");
}

std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04zu.csv", k);
  return buf;
}

}  // namespace

std::vector<CheckResult> run_checks(const RunConfig& cfg, const KineticRun& run) {
  const KineticModel model = make_kinetic_model(cfg);
  const auto& rows = run.rows;
  const auto& snaps = run.snapshots;
  const PhaseDensity& f0 = snaps.front();
  const double mass0 = rows.front().mass;
  const double e0 = rows.front().energy;
  const double c_align = model.alignment_constant();
  double dt = 0.0;
  for (std::size_t n = 0; n + 1 < rows.size(); ++n) dt = std::max(dt, rows[n + 1].t - rows[n].t);
  const double tol = cfg.sweep.tol_scheme_factor * (f0.grid.dx() + f0.grid.dv() + dt) * e0;

  std::vector<CheckResult> out;
  const EnergyCheck energy = energy_inequality_check(rows, c_align, tol);
  out.push_back({"energy_inequality", energy.pass, -energy.min_slack + tol, tol});
  out.push_back({"energy_scheme_defect", energy.worst_defect <= tol, energy.worst_defect, tol});

  const double c_lp = lp_growth_constant(mass0, model.phi);
  const LpGrowthCheck linf = lp_growth_check(rows, kInfinity, c_lp);
  out.push_back({"linf_growth", linf.pass, linf.worst_ratio, 1.0});
  if (!std::isinf(cfg.time.lp)) {
    const LpGrowthCheck lp = lp_growth_check(rows, cfg.time.lp, c_lp);
    out.push_back({"lp_growth", lp.pass, lp.worst_ratio, 1.0});
  }

  double worst_lbound = -kInfinity;
  for (const auto& r : rows) worst_lbound = std::max(worst_lbound, r.lbound_lhs - r.lbound_rhs);
  const double lbound_tol = 1e-10 * std::max(1.0, e0);
  out.push_back({"lbound", worst_lbound <= lbound_tol, worst_lbound, lbound_tol});

  double div = 0.0;
  for (const auto& s : snaps) div = std::max(div, divergence_identity_check(force_field(s, model), s.grid));
  out.push_back({"divergence_identity", div <= 1e-12, div, 1e-12});

  if (model.mode == AlignmentMode::Nonlocal) {
    const double sup = mt_sup(snaps, *model.mollifier);
    out.push_back({"mt_constant", sup <= c_align + 1e-8, sup, c_align});
  }

  const double drift = std::abs(rows.back().mass + rows.back().outflow - mass0) / mass0;
  out.push_back({"mass_balance", drift <= 1e-10, drift, 1e-10});

  if (snaps.size() >= 3) {
    const auto phis = make_test_functions(f0.grid, snaps.back().t - f0.t, cfg.sweep.max_degree);
    const double res = weak_residual(snaps, phis, model);
    out.push_back({"weak_residual", std::isfinite(res), res, kInfinity});
  }
  return out;
}

std::string check_csv(const std::vector<CheckResult>& checks) {
  CsvWriter w({"check", "pass", "value", "limit"});
  for (const auto& c : checks)
    w.row(std::vector<std::string>{c.name, c.pass ? "1" : "0", format_double(c.value), format_double(c.limit)});
  return w.str();
}

int cmd_kinetic(const RunConfig& cfg, const fs::path& out) {
  const auto start = Clock::now();
  prepare(out);
  const KineticModel model = make_kinetic_model(cfg);
  const PhaseDensity f0 = sample_density(cfg.init, make_grid(cfg));
  std::vector<DiagnosticsRow> partial;
  RunHooks hooks;
  hooks.on_row = [&](const DiagnosticsRow& row) { partial.push_back(row); };
  KineticRun run;
  try {
    run = flocklab::run(f0, model, make_scheme(cfg), hooks);
  } catch (const Error&) {
    // Keep what was computed before the abort.
    write_atomic(out / "diagnostics.csv", diagnostics_csv(partial));
    throw;
  }

  std::vector<std::string> files{"diagnostics.csv"};
  write_atomic(out / "diagnostics.csv", diagnostics_csv(run.rows));
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    files.push_back(snapshot_name(k));
    write_atomic(out / files.back(), snapshot_csv(run.snapshots[k]));
  }
  write_manifest(out, "kinetic", cfg, start, files);
  return 0;
}

int cmd_particles(const RunConfig& cfg, const fs::path& out) {
  const auto start = Clock::now();
  prepare(out);
  const ParticleModel model = make_particle_model(cfg);
  const ParticleEnsemble e0 =
      sample_particles(cfg.init, cfg.particles.n, cfg.particles.seed, cfg.particles.dim);
  ParticleRunOptions opts;
  opts.dt = cfg.particles.dt;
  opts.t_end = cfg.time.t_end;
  opts.snapshot_stride = cfg.time.snapshot_stride;
  opts.lp = cfg.time.lp;
  if (cfg.particles.dim == 1) opts.grid = make_grid(cfg);
  const ParticleRun run = run_particles(e0, model, opts);

  write_atomic(out / "diagnostics.csv", diagnostics_csv(run.rows));
  write_atomic(out / "trajectory.csv", trajectory_csv(run.snapshots));
  write_manifest(out, "particles", cfg, start, {"diagnostics.csv", "trajectory.csv"});
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::optional<std::vector<double>>& r_list, const fs::path& out) {
  const auto start = Clock::now();
  prepare(out);
  std::vector<double> radii;
  for (const double r : r_list ? *r_list : cfg.sweep.r_list) {
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("sweep.r_list", "entries must be >= 0");
    if (r > 0.0) radii.push_back(r);  // r = 0 is always run as the reference
  }
  if (radii.empty()) throw ValidationError("sweep.r_list", "needs at least one r > 0");

  KineticModel base = make_kinetic_model(cfg);
  base.mollifier = make_mollifier(make_profile(cfg), radii.front());
  const PhaseDensity f0 = sample_density(cfg.init, make_grid(cfg));
  SweepOptions opts;
  opts.q = cfg.sweep.q;
  opts.max_degree = cfg.sweep.max_degree;
  opts.tol_factor = cfg.sweep.tol_scheme_factor;
  const SweepReport report = r_sweep(f0, base, make_scheme(cfg), radii, opts);
  const SweepVerdict verdict = sweep_verdict(report, make_criteria(cfg));

  std::vector<CheckResult> checks;
  checks.push_back({"sweep_decrease", verdict.pass, double(verdict.failures.size()), 0.0});
  for (const auto& row : report.rows)
    checks.push_back({"mt_constant_r=" + format_double(row.r), row.mt_sup <= report.mt_constant + 1e-8, row.mt_sup,
                      report.mt_constant});
  checks.push_back({"limit_weak_residual", true, report.limit_weak_residual, kInfinity});

  write_atomic(out / "sweep.csv", sweep_csv(report));
  write_atomic(out / "check.csv", check_csv(checks));
  write_manifest(out, "sweep", cfg, start, {"sweep.csv", "check.csv"});
  for (const auto& f : verdict.failures) std::fprintf(stderr, "sweep: %s\n", f.c_str());
  bool ok = verdict.pass;
  for (const auto& c : checks) ok = ok && c.pass;
  return ok ? 0 : 1;
}

int cmd_check(const RunConfig& cfg, const std::optional<fs::path>& out) {
  const auto start = Clock::now();
  const PhaseDensity f0 = sample_density(cfg.init, make_grid(cfg));
  const KineticRun run = flocklab::run(f0, make_kinetic_model(cfg), make_scheme(cfg));
  const auto checks = run_checks(cfg, run);
  const std::string table = check_csv(checks);
  if (out) {
    prepare(*out);
    write_atomic(*out / "check.csv", table);
    write_manifest(*out, "check", cfg, start, {"check.csv"});
  } else {
    std::fwrite(table.data(), 1, table.size(), stdout);
  }
  for (const auto& c : checks)
    if (!c.pass) return 1;
  return 0;
}

int exit_code_for(const std::string& kind) {
  if (kind == "ParseError" || kind == "ValidationError" || kind == "UnknownKey" || kind == "InvalidArgument" ||
      kind == "UnresolvedKernel")
    return 2;
  return 3;
}

}  // namespace flocklab
