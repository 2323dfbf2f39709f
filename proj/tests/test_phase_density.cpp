#include <doctest.h>

#include <cmath>
#include <random>

#include "flocklab/errors.hpp"
#include "flocklab/initial_data.hpp"
#include "flocklab/phase_density.hpp"

using namespace flocklab;

namespace {

PhaseDensity indicator(int cells_per_unit) {
  // [-2, 2]^2 with faces on +-1, f = 1 on [-1, 1]^2.
  PhaseDensity f(PhaseGrid{{2.0, 4 * cells_per_unit}, {2.0, 4 * cells_per_unit}});
  const Eigen::ArrayXd x = f.grid.x.centers(), v = f.grid.v.centers();
  for (int i = 0; i < f.f.rows(); ++i)
    for (int k = 0; k < f.f.cols(); ++k) f.f(i, k) = (std::abs(x(i)) < 1 && std::abs(v(k)) < 1) ? 1.0 : 0.0;
  return f;
}

PhaseDensity random_density(std::mt19937_64& rng, int nx, int nv, double sparsity = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> lx(0.5, 3.0), lv(0.5, 3.0);
  PhaseDensity f(PhaseGrid{{lx(rng), nx}, {lv(rng), nv}});
  for (int i = 0; i < nx; ++i)
    for (int k = 0; k < nv; ++k) f.f(i, k) = u(rng) < sparsity ? 0.0 : u(rng);
  return f;
}

PhaseDensity gaussian_in_v(const PhaseGrid& g, double mean, double sigma) {
  PhaseDensity f(g);
  const Eigen::ArrayXd x = g.x.centers(), v = g.v.centers();
  for (int i = 0; i < g.x.cells; ++i)
    for (int k = 0; k < g.v.cells; ++k)
      f.f(i, k) = cos2_bump(x(i), 0.8) * std::exp(-0.5 * std::pow((v(k) - mean) / sigma, 2));
  return f;
}

}  // namespace

TEST_CASE("moments of the indicator") {
  const PhaseDensity f = indicator(10);
  const Moments m = moments(f);
  const Eigen::ArrayXd x = f.grid.x.centers();
  for (int i = 0; i < x.size(); ++i) {
    CHECK(m.rho(i) == doctest::Approx(std::abs(x(i)) < 1 ? 2.0 : 0.0).epsilon(1e-14));
    CHECK(std::abs(m.j(i)) <= 1e-15);
  }
  CHECK(f.mass() == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("separable density has constant bulk velocity") {
  PhaseDensity f(PhaseGrid{{1.0, 30}, {2.0, 50}});
  const Eigen::ArrayXd x = f.grid.x.centers(), v = f.grid.v.centers();
  for (int i = 0; i < 30; ++i)
    for (int k = 0; k < 50; ++k) f.f(i, k) = cos2_bump(x(i), 0.6) * (1.0 + std::tanh(v(k) - 0.3));
  const Moments m = moments(f);
  const Eigen::ArrayXd u = bulk_velocity(m.rho, m.j, vacuum_floor(m.rho));
  double ref = 0.0;
  for (int i = 0; i < 30; ++i)
    if (m.rho(i) > 0) {
      ref = u(i);
      break;
    }
  for (int i = 0; i < 30; ++i)
    if (m.rho(i) > 0) CHECK(u(i) == doctest::Approx(ref).epsilon(1e-13));
}

TEST_CASE("shifted Gaussian bulk velocity against a refined velocity grid") {
  const PhaseGrid coarse{{1.0, 20}, {3.0, 60}};
  const PhaseGrid fine{{1.0, 20}, {3.0, 60 * 64}};
  const Moments mc = moments(gaussian_in_v(coarse, 0.7, 0.35));
  const Moments mf = moments(gaussian_in_v(fine, 0.7, 0.35));
  const Eigen::ArrayXd uc = bulk_velocity(mc.rho, mc.j, vacuum_floor(mc.rho));
  const Eigen::ArrayXd uf = bulk_velocity(mf.rho, mf.j, vacuum_floor(mf.rho));
  for (int i = 0; i < 20; ++i) {
    if (mf.rho(i) <= 0) continue;
    CHECK(uf(i) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(std::abs(uc(i) - uf(i)) <= coarse.dv() * coarse.dv());
  }
}

TEST_CASE("bulk velocity vacuum rule") {
  const Eigen::ArrayXd zero = Eigen::ArrayXd::Zero(5);
  CHECK((bulk_velocity(zero, zero, 0.0) == 0.0).all());
  CHECK((bulk_velocity(zero, zero, vacuum_floor(zero)) == 0.0).all());

  Eigen::ArrayXd rho(1), j(1);
  rho << 2.0;
  j << 1.0;
  CHECK(bulk_velocity(rho, j, 1e-12)(0) == 0.5);

  const double floor = 1e-6;
  rho << floor / 2;
  j << 1e-20;
  CHECK(bulk_velocity(rho, j, floor)(0) == 0.0);
}

TEST_CASE("bulk velocity is total on random input") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0), e(-300.0, 10.0);
  for (int sample = 0; sample < 300; ++sample) {
    const int n = 1 + int(u(rng) * 40);
    Eigen::ArrayXd rho(n), j(n);
    for (int i = 0; i < n; ++i) {
      // Magnitudes spanning subnormals to large values, with exact zeros.
      rho(i) = u(rng) < 0.2 ? 0.0 : std::pow(10.0, e(rng));
      j(i) = (u(rng) - 0.5) * std::pow(10.0, e(rng));
    }
    const Eigen::ArrayXd out = bulk_velocity(rho, j, vacuum_floor(rho));
    CHECK(out.isFinite().all());
    for (int i = 0; i < n; ++i)
      if (rho(i) == 0.0) CHECK(out(i) == 0.0);
  }
}

TEST_CASE("weighted moments") {
  SUBCASE("uniform density without momentum") {
    PhaseDensity f(PhaseGrid{{2.0, 100}, {1.0, 20}});
    f.f.setConstant(0.3);
    const MomentField m = weighted_moments(f, make_mollifier(ProfileShape::Triangle, 0.2));
    CHECK(m.u_t.abs().maxCoeff() <= 1e-15);
  }
  SUBCASE("very wide kernel averages globally") {
    PhaseDensity f(PhaseGrid{{1.0, 40}, {2.0, 40}});
    f.f = sample_density(InitialData{}, f.grid).f;
    const double r = 1e4;
    const MomentField m = weighted_moments(f, make_mollifier(ProfileShape::Triangle, r));
    double mass = 0.0, momentum = 0.0;
    const Eigen::ArrayXd v = f.grid.v.centers();
    for (int i = 0; i < 40; ++i)
      for (int k = 0; k < 40; ++k) {
        mass += f.f(i, k) * f.grid.cell_volume();
        momentum += v(k) * f.f(i, k) * f.grid.cell_volume();
      }
    // K^r varies by at most 2 Lx / r across the data.
    for (int i = 0; i < 40; ++i)
      CHECK(std::abs(m.u_t(i) - momentum / mass) <= 4.0 * 2.0 / r * (std::abs(momentum) + mass) / mass);
  }
  SUBCASE("monokinetic-like data") {
    const double u0 = -0.4;
    const PhaseGrid g{{1.0, 100}, {2.0, 200}};
    const MomentField m = weighted_moments(gaussian_in_v(g, u0, 0.05), make_mollifier(ProfileShape::Bump2, 0.3));
    for (int i = 0; i < 100; ++i)
      if (m.rho_t(i) > vacuum_floor(m.rho_t)) CHECK(std::abs(m.u_t(i) - u0) <= g.dv() * g.dv());
  }
  SUBCASE("resolution guard propagates") {
    PhaseDensity f(PhaseGrid{{1.0, 10}, {1.0, 10}});
    CHECK_THROWS_AS(weighted_moments(f, make_mollifier(ProfileShape::Triangle, 0.1)), UnresolvedKernel);
  }
}

TEST_CASE("energy") {
  SUBCASE("indicator with quadratic confinement") {
    // Midpoint rule for int_{-1}^{1} s^2 is 2/3 - h^2/6.
    for (const int n : {5, 10, 40}) {
      const PhaseDensity f = indicator(n);
      const double h = 1.0 / n;
      CHECK(energy(f, ConfinementPotential{1.0}) == doctest::Approx(4.0 / 3.0 - h * h / 3.0).epsilon(1e-13));
    }
    CHECK(energy(indicator(200), ConfinementPotential{1.0}) == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
  }
  SUBCASE("zero density") {
    CHECK(energy(PhaseDensity(PhaseGrid{{1.0, 8}, {1.0, 8}}), ConfinementPotential{2.0}) == 0.0);
  }
  SUBCASE("kinetic part against a refined grid") {
    const PhaseDensity coarse = gaussian_in_v(PhaseGrid{{1.0, 16}, {3.0, 48}}, 0.0, 0.5);
    const PhaseDensity fine = gaussian_in_v(PhaseGrid{{1.0, 16}, {3.0, 48 * 64}}, 0.0, 0.5);
    CHECK(energy(coarse, ConfinementPotential{0.0}) == doctest::Approx(kinetic_energy(coarse)).epsilon(1e-15));
    CHECK(kinetic_energy(coarse) == doctest::Approx(kinetic_energy(fine)).epsilon(1e-8));
  }
}

TEST_CASE("dissipations") {
  SUBCASE("indicator with constant influence") {
    for (const int n : {5, 20}) {
      const PhaseDensity f = indicator(n);
      const double h = 1.0 / n;
      const double second = 2.0 * (2.0 / 3.0 - h * h / 6.0);
      const Dissipations d = dissipations(f, Eigen::ArrayXd::Zero(f.grid.x.cells), make_constant_influence(1.0));
      CHECK(d.cs == doctest::Approx(4.0 * second).epsilon(1e-13));
      CHECK(d.local == doctest::Approx(second).epsilon(1e-13));
    }
    const PhaseDensity f = indicator(200);
    const Dissipations d = dissipations(f, Eigen::ArrayXd::Zero(f.grid.x.cells), make_constant_influence(1.0));
    CHECK(d.cs == doctest::Approx(16.0 / 3.0).epsilon(1e-5));
  }
  SUBCASE("zero density") {
    const PhaseDensity f(PhaseGrid{{1.0, 8}, {1.0, 8}});
    const Dissipations d = dissipations(f, Eigen::ArrayXd::Zero(8), make_influence(1.0, 1.0));
    CHECK(d.local == 0.0);
    CHECK(d.cs == 0.0);
  }
  SUBCASE("factorised sums agree with four-fold sums on small grids") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> w(-1.0, 1.0);
    for (int sample = 0; sample < 20; ++sample) {
      const PhaseDensity f = random_density(rng, 8, 8);
      const InfluenceKernel phi = make_influence(0.5 + w(rng) * 0.4, 1.0 + w(rng) * 0.5);
      Eigen::ArrayXd u(8);
      for (int i = 0; i < 8; ++i) u(i) = w(rng);
      const Eigen::ArrayXd x = f.grid.x.centers(), v = f.grid.v.centers();
      const double vol = f.grid.cell_volume();
      double cs = 0.0, local = 0.0;
      for (int i = 0; i < 8; ++i)
        for (int k = 0; k < 8; ++k) {
          local += f.f(i, k) * (u(i) - v(k)) * (u(i) - v(k)) * vol;
          for (int i2 = 0; i2 < 8; ++i2)
            for (int k2 = 0; k2 < 8; ++k2)
              cs += 0.5 * phi(x(i) - x(i2)) * f.f(i, k) * f.f(i2, k2) * (v(k2) - v(k)) * (v(k2) - v(k)) * vol * vol;
        }
      const Dissipations d = dissipations(f, u, phi);
      CHECK(d.cs == doctest::Approx(cs).epsilon(1e-10));
      CHECK(d.local == doctest::Approx(local).epsilon(1e-12));
      CHECK(cs_dissipation_direct(f, phi) == doctest::Approx(cs).epsilon(1e-12));
    }
  }
  SUBCASE("local dissipation vanishes for monokinetic data") {
    double previous = kInfinity;
    for (const int nv : {40, 80, 160}) {
      PhaseDensity f(PhaseGrid{{1.0, 10}, {1.0, nv}});
      const Eigen::ArrayXd v = f.grid.v.centers();
      // Mass concentrated in a velocity width of 4 cells around 0.25.
      for (int k = 0; k < nv; ++k)
        if (std::abs(v(k) - 0.25) < 2.0 * f.grid.dv()) f.f.col(k) = 1.0;
      const Moments m = moments(f);
      const double d = dissipations(f, bulk_velocity(m.rho, m.j, vacuum_floor(m.rho)), make_influence(1, 1)).local;
      CHECK(d < previous);
      previous = d;
    }
  }
}

TEST_CASE("lp norms") {
  const PhaseDensity f = indicator(10);
  for (const double p : {1.0, 1.5, 2.0, 7.0}) CHECK(lp_norm(f, p) == doctest::Approx(std::pow(4.0, 1.0 / p)).epsilon(1e-13));
  CHECK(lp_norm(f, kInfinity) == 1.0);

  std::mt19937_64 rng(2);
  for (int sample = 0; sample < 30; ++sample) {
    PhaseDensity g = random_density(rng, 12, 9);
    CHECK(lp_norm(g, 1.0) == doctest::Approx(g.mass()).epsilon(1e-13));
    const double n2 = lp_norm(g, 2.5);
    g.f *= 2.0;
    CHECK(lp_norm(g, 2.5) == doctest::Approx(2.0 * n2).epsilon(1e-13));
  }
  CHECK_THROWS_AS(lp_norm(f, 0.5), InvalidArgument);
  CHECK(lp_norm(Eigen::ArrayXd::Constant(4, -2.0), 0.5, 1.0) == doctest::Approx(4.0));
}

TEST_CASE("quadrature consistency and Cauchy-Schwarz") {
  std::mt19937_64 rng(31);
  for (int sample = 0; sample < 100; ++sample) {
    const PhaseDensity f = random_density(rng, 3 + sample % 17, 2 + sample % 23);
    const Moments m = moments(f);
    CHECK(m.rho.sum() * f.grid.dx() == doctest::Approx(f.mass()).epsilon(1e-13));
    for (int i = 0; i < m.rho.size(); ++i) CHECK(m.j(i) * m.j(i) <= m.s(i) * m.rho(i) * (1.0 + 1e-12));
  }
}

TEST_CASE("moment bounds from mass, energy and sup norm") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int sample = 0; sample < 40; ++sample) {
    InitialData init;
    init.x1 = -0.5 + u(rng) * 0.4;
    init.x2 = 0.1 + u(rng) * 0.4;
    init.v1 = -1 + 2 * u(rng);
    init.v2 = -1 + 2 * u(rng);
    init.m1 = 0.1 + u(rng);
    init.m2 = 0.1 + u(rng);
    init.wx = 0.05 + 0.3 * u(rng);
    init.wv = 0.02 + 0.4 * u(rng);
    const PhaseDensity f = sample_density(init, PhaseGrid{{1.0, 64}, {2.0, 96}});
    const Moments m = moments(f);
    const double second = m.s.sum() * f.grid.dx();
    for (const double p : {1.0, 2.0, 2.9, 3.0})
      for (const double q : {1.0, 1.25, 1.5}) {
        const MomentBounds b = moment_lp_bounds(lp_norm(f, kInfinity), second, f.mass(), p, q, f.grid);
        CHECK(lp_norm(m.rho, f.grid.dx(), p) <= b.rho * (1 + 1e-12));
        CHECK(lp_norm(m.j, f.grid.dx(), q) <= b.j * (1 + 1e-12));
      }
  }
  const PhaseGrid g{{1.0, 4}, {1.0, 4}};
  CHECK_THROWS_AS(moment_lp_bounds(1, 1, 1, 3.5, 1, g), InvalidArgument);
  CHECK_THROWS_AS(moment_lp_bounds(1, 1, 1, 2, 1.6, g), InvalidArgument);
}
