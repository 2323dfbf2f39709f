#include <doctest.h>

#include <cmath>
#include <random>

#include "flocklab/errors.hpp"
#include "flocklab/initial_data.hpp"
#include "flocklab/kinetic_solver.hpp"
#include "flocklab/limit_lab.hpp"

using namespace flocklab;

namespace {

KineticModel free_model() {
  KineticModel m;
  m.phi = make_influence(0.0, 1.0);
  m.mode = AlignmentMode::Off;
  return m;
}

KineticModel full_model(double r, double kappa = 1.0) {
  KineticModel m;
  m.phi = make_influence(1.0, 1.0);
  m.mollifier = make_mollifier(ProfileShape::Triangle, r);
  m.mode = AlignmentMode::Nonlocal;
  m.psi = ConfinementPotential{kappa};
  return m;
}

double l1_distance(const PhaseDensity& a, const PhaseDensity& b) {
  return (a.f - b.f).abs().sum() * a.grid.cell_volume();
}

InitialData single_bump() {
  InitialData d;
  d.kind = InitialData::Kind::Bump;
  d.x1 = -0.3;
  d.v1 = 0.2;
  d.m1 = 1.0;
  d.wx = 0.4;
  d.wv = 0.4;
  return d;
}

}  // namespace

TEST_CASE("force field of data without momentum") {
  PhaseDensity f(PhaseGrid{{1.0, 40}, {1.0, 30}});
  const Eigen::ArrayXd x = f.grid.x.centers(), v = f.grid.v.centers();
  for (int i = 0; i < 40; ++i)
    for (int k = 0; k < 30; ++k) f.f(i, k) = cos2_bump(x(i) - 0.2, 0.5) * cos2_bump(v(k), 0.6);
  for (const auto mode : {AlignmentMode::Nonlocal, AlignmentMode::Local}) {
    KineticModel model = full_model(0.3, 0.7);
    model.mode = mode;
    const ForceField force = force_field(f, model);
    CHECK(force.a.abs().maxCoeff() <= 1e-15);
    CHECK(force.u_align.abs().maxCoeff() <= 1e-15);
    CHECK(force.b.minCoeff() >= 0.0);
    for (int i = 0; i < 40; i += 7)
      for (const double w : {-0.8, 0.1, 0.5})
        CHECK(force(i, w) == doctest::Approx(-0.7 * x(i) - (force.b(i) + 1.0) * w).epsilon(1e-13));
  }
}

TEST_CASE("constant influence gives global moments") {
  const PhaseDensity f = sample_density(InitialData{}, PhaseGrid{{1.0, 64}, {1.5, 48}});
  KineticModel model = free_model();
  model.phi = make_constant_influence(0.6);
  const ForceField force = force_field(f, model);
  const Eigen::ArrayXd v = f.grid.v.centers();
  double mass = 0.0, momentum = 0.0;
  for (int i = 0; i < f.f.rows(); ++i)
    for (int k = 0; k < f.f.cols(); ++k) {
      mass += f.f(i, k) * f.grid.cell_volume();
      momentum += v(k) * f.f(i, k) * f.grid.cell_volume();
    }
  for (int i = 0; i < f.f.rows(); ++i) {
    CHECK(force.a(i) == doctest::Approx(0.6 * momentum).epsilon(1e-12));
    CHECK(force.b(i) == doctest::Approx(0.6 * mass).epsilon(1e-12));
  }
}

TEST_CASE("local mode aligns toward the bulk velocity") {
  const double u0 = 0.35;
  PhaseDensity f(PhaseGrid{{1.0, 32}, {2.0, 160}});
  const Eigen::ArrayXd x = f.grid.x.centers(), v = f.grid.v.centers();
  for (int i = 0; i < 32; ++i)
    for (int k = 0; k < 160; ++k) f.f(i, k) = cos2_bump(x(i), 0.7) * std::exp(-std::pow((v(k) - u0) / 0.08, 2));
  KineticModel model = free_model();
  model.mode = AlignmentMode::Local;
  const ForceField force = force_field(f, model);
  const Eigen::ArrayXd rho = moments(f).rho;
  for (int i = 0; i < 32; ++i)
    if (rho(i) > 0.0) CHECK(std::abs(force.u_align(i) - u0) <= f.grid.dv() * f.grid.dv());
  CHECK(model.alignment_constant() == 1.0);
  CHECK(free_model().alignment_constant() == 0.0);
}

TEST_CASE("nonlocal mode needs a mollifier") {
  KineticModel model = free_model();
  model.mode = AlignmentMode::Nonlocal;
  CHECK_THROWS_AS(force_field(PhaseDensity(PhaseGrid{{1, 8}, {1, 8}}), model), InvalidArgument);
  model.mollifier = make_mollifier(ProfileShape::Triangle, 0.05);
  CHECK_THROWS_AS(force_field(PhaseDensity(PhaseGrid{{1, 8}, {1, 8}}), model), UnresolvedKernel);
}

TEST_CASE("discrete velocity divergence of the alignment field") {
  const PhaseDensity f = sample_density(InitialData{}, PhaseGrid{{1.0, 64}, {1.5, 64}});
  for (const auto mode : {AlignmentMode::Off, AlignmentMode::Local, AlignmentMode::Nonlocal}) {
    KineticModel model = full_model(0.3);
    model.mode = mode;
    const ForceField force = force_field(f, model);
    const double dv = f.grid.dv();
    for (int i = 0; i < 64; ++i)
      for (int k = 0; k < 64; k += 5) {
        const double w = f.grid.v.center(k);
        const double div = (force.alignment(i, w + dv / 2) - force.alignment(i, w - dv / 2)) / dv;
        CHECK(div == doctest::Approx(-force.b(i) - force.relax()).epsilon(1e-12));
      }
  }
}

TEST_CASE("free transport converges to the exact solution") {
  const InitialData init = single_bump();
  const double t_end = 0.5;
  for (const auto limiter : {Limiter::None, Limiter::Minmod}) {
    std::vector<double> h, err;
    for (const int n : {64, 128, 256}) {
      const PhaseGrid g{{1.0, n}, {1.0, n}};
      SchemeConfig cfg;
      cfg.t_end = t_end;
      cfg.limiter = limiter;
      const KineticRun run = flocklab::run(sample_density(init, g), free_model(), cfg);
      h.push_back(g.dx());
      err.push_back(l1_distance(run.snapshots.back(), free_transport_solution(init, g, t_end)));
    }
    const double order = fitted_order(h, err);
    INFO("limiter " << to_string(limiter) << " order " << order);
    CHECK(order >= 0.9);
    CHECK(order <= 2.1);
    CHECK(err[1] < err[0]);
    CHECK(err[2] < err[1]);
  }
}

TEST_CASE("vacuum stays vacuum") {
  const PhaseDensity f0(PhaseGrid{{1.0, 32}, {1.0, 32}});
  SchemeConfig cfg;
  cfg.t_end = 0.2;
  const KineticRun run = flocklab::run(f0, full_model(0.3), cfg);
  for (const auto& s : run.snapshots) CHECK((s.f == 0.0).all());
  for (const auto& r : run.rows) {
    CHECK(r.mass == 0.0);
    CHECK(r.energy == 0.0);
  }
}

TEST_CASE("one step is consistent with the semi-discrete right-hand side") {
  const PhaseDensity f0 = sample_density(single_bump(), PhaseGrid{{1.0, 48}, {1.0, 48}});
  const KineticModel model = full_model(0.3);
  const ForceField force = force_field(f0, model);
  for (const auto limiter : {Limiter::None, Limiter::Minmod}) {
    const Eigen::ArrayXXd rhs = transport_rhs(f0, force, limiter);
    std::vector<double> defect;
    for (const double dt : {4e-4, 2e-4, 1e-4}) {
      PhaseDensity f = f0;
      double outflow = 0.0;
      advance(f, force, dt, limiter, outflow);
      defect.push_back((f.f - f0.f - dt * rhs).abs().sum() * f0.grid.cell_volume());
    }
    CHECK(defect[0] / defect[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(defect[1] / defect[2] == doctest::Approx(4.0).epsilon(0.1));
  }
}

TEST_CASE("free transport conserves mass and momentum") {
  SchemeConfig cfg;
  cfg.t_end = 1.0;
  const KineticRun run = flocklab::run(sample_density(InitialData{}, PhaseGrid{{1.6, 96}, {1.0, 64}}), free_model(), cfg);
  const auto& first = run.rows.front();
  CHECK(run.outflow <= 1e-20);
  for (const auto& r : run.rows) {
    CHECK(std::abs(r.mass - first.mass) <= 1e-10 * first.mass);
    CHECK(std::abs(r.momentum - first.momentum) <= 1e-10 * first.mass);
  }
}

TEST_CASE("mass balance and positivity under the full model") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int sample = 0; sample < 6; ++sample) {
    InitialData init;
    init.x1 = -0.4 + 0.2 * u(rng);
    init.x2 = 0.2 + 0.2 * u(rng);
    init.v1 = 0.6 * (u(rng) - 0.5);
    init.v2 = 0.6 * (u(rng) - 0.5);
    init.m1 = 0.2 + u(rng);
    init.m2 = 0.2 + u(rng);
    SchemeConfig cfg;
    cfg.t_end = 0.3;
    cfg.limiter = sample % 2 ? Limiter::None : Limiter::Minmod;
    cfg.cfl = sample % 2 ? 0.9 : 0.6;
    const PhaseDensity f0 = sample_density(init, PhaseGrid{{1.0, 48}, {1.5, 48}});
    const KineticRun run = flocklab::run(f0, full_model(0.25 + 0.1 * u(rng)), cfg,
                                         {nullptr, [](const PhaseDensity& f) { CHECK(f.f.minCoeff() >= 0.0); }});
    for (const auto& r : run.rows) CHECK(std::abs(r.mass + r.outflow - f0.mass()) <= 1e-10 * f0.mass());
  }
}

TEST_CASE("step errors") {
  const PhaseDensity f0 = sample_density(InitialData{}, PhaseGrid{{1.0, 32}, {1.5, 32}});
  const ForceField force = force_field(f0, full_model(0.3));
  PhaseDensity f = f0;
  double outflow = 0.0;
  CHECK_THROWS_AS(advance(f, force, 1.0, Limiter::Minmod, outflow), CFLViolation);
  CHECK_THROWS_AS(advance(f, force, 0.0, Limiter::Minmod, outflow), CFLViolation);
  CHECK_NOTHROW(advance(f, force, stable_dt(f.grid, force, 0.6), Limiter::Minmod, outflow));

  SchemeConfig cfg;
  cfg.t_end = 0.1;
  cfg.cfl = 0.9;
  CHECK_THROWS_AS(flocklab::run(f0, full_model(0.3), cfg), InvalidArgument);
  cfg.limiter = Limiter::None;
  CHECK_NOTHROW(flocklab::run(f0, full_model(0.3), cfg));
  cfg.cfl = 0.0;
  CHECK_THROWS_AS(flocklab::run(f0, full_model(0.3), cfg), InvalidArgument);
  CHECK(max_stable_courant(Limiter::None) == 1.0);
  CHECK(max_stable_courant(Limiter::Minmod) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(parse_limiter("superbee"), InvalidArgument);
}

TEST_CASE("mass leaving the box aborts the run") {
  InitialData init = single_bump();
  init.x1 = 0.6;
  init.v1 = 0.5;
  init.wx = 0.3;
  SchemeConfig cfg;
  cfg.t_end = 1.0;
  std::vector<DiagnosticsRow> seen;
  CHECK_THROWS_AS(flocklab::run(sample_density(init, PhaseGrid{{1.0, 48}, {1.0, 32}}), free_model(), cfg,
                                {[&](const DiagnosticsRow& r) { seen.push_back(r); }, nullptr}),
                  MassLossExceeded);
  CHECK(!seen.empty());
}

TEST_CASE("runs are deterministic") {
  const PhaseDensity f0 = sample_density(InitialData{}, PhaseGrid{{1.0, 48}, {1.5, 48}});
  SchemeConfig cfg;
  cfg.t_end = 0.25;
  cfg.snapshot_stride = 0.1;
  const KineticRun a = flocklab::run(f0, full_model(0.3), cfg);
  const KineticRun b = flocklab::run(f0, full_model(0.3), cfg);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t n = 0; n < a.rows.size(); ++n) CHECK(a.rows[n] == b.rows[n]);
  REQUIRE(a.snapshots.size() == 4);
  CHECK(a.snapshots[1].t == doctest::Approx(0.1));
  CHECK(a.snapshots.back().t == 0.25);
  for (std::size_t n = 0; n < a.snapshots.size(); ++n) CHECK((a.snapshots[n].f == b.snapshots[n].f).all());
}

TEST_CASE("energy decays up to the alignment allowance") {
  const PhaseDensity f0 = sample_density(InitialData{}, PhaseGrid{{1.0, 64}, {1.5, 64}});
  KineticModel model = full_model(0.3);
  SchemeConfig cfg;
  cfg.t_end = 0.5;
  const KineticRun run = flocklab::run(f0, model, cfg);
  double dt = 0.0;
  for (std::size_t n = 0; n + 1 < run.rows.size(); ++n) dt = std::max(dt, run.rows[n + 1].t - run.rows[n].t);
  const double tol = default_tol_scheme(f0.grid, dt, run.rows.front().energy);
  CHECK(energy_inequality_check(run.rows, model.alignment_constant(), tol).pass);
}

TEST_CASE("concentrated state at the potential minimum stays put") {
  // Drift away from the initial state shrinks under refinement.
  std::vector<double> drift;
  for (const int n : {32, 64, 128}) {
    const PhaseGrid g{{1.0, n}, {1.0, n}};
    InitialData init;
    init.kind = InitialData::Kind::Bump;
    init.x1 = init.v1 = 0.0;
    init.wx = 4.0 * g.dx();
    init.wv = 4.0 * g.dv();
    SchemeConfig cfg;
    cfg.t_end = 0.25;
    KineticModel model = full_model(0.25);
    const PhaseDensity f0 = sample_density(init, g);
    const KineticRun run = flocklab::run(f0, model, cfg);
    const auto& last = run.rows.back();
    drift.push_back(std::abs(last.momentum) + std::abs(last.energy - run.rows.front().energy));
  }
  CHECK(drift[1] < drift[0]);
  CHECK(drift[2] < drift[1]);
}
