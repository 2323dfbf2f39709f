#include "flocklab/initial_data.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "flocklab/errors.hpp"

namespace flocklab {

double cos2_bump(double s, double width) {
  if (std::abs(s) >= width) return 0.0;
  const double c = std::cos(0.5 * std::numbers::pi * s / width);
  return c * c / width;
}

double InitialData::operator()(double x, double v) const {
  double f = m1 * cos2_bump(x - x1, wx) * cos2_bump(v - v1, wv);
  if (kind == Kind::TwoBump) f += m2 * cos2_bump(x - x2, wx) * cos2_bump(v - v2, wv);
  return f;
}

InitialData::Kind parse_init_kind(std::string_view name) {
  if (name == "bump") return InitialData::Kind::Bump;
  if (name == "two_bump") return InitialData::Kind::TwoBump;
  throw InvalidArgument("unknown initial datum '" + std::string(name) + "'");
}

std::string to_string(InitialData::Kind kind) { return kind == InitialData::Kind::Bump ? "bump" : "two_bump"; }

PhaseDensity sample_density(const InitialData& init, const PhaseGrid& grid) {
  return free_transport_solution(init, grid, 0.0);
}

PhaseDensity free_transport_solution(const InitialData& init, const PhaseGrid& grid, double t) {
  PhaseDensity f(grid, t);
  const Eigen::ArrayXd x = grid.x.centers();
  const Eigen::ArrayXd v = grid.v.centers();
  for (int j = 0; j < grid.v.cells; ++j)
    for (int i = 0; i < grid.x.cells; ++i) f.f(i, j) = init(x(i) - v(j) * t, v(j));
  return f;
}

namespace {

/// Rejection sample from cos2_bump(. - center, width).
double draw_bump(std::mt19937_64& rng, double center, double width) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    const double s = (2.0 * unit(rng) - 1.0) * width;
    const double c = std::cos(0.5 * std::numbers::pi * s / width);
    if (unit(rng) < c * c) return center + s;
  }
}

}  // namespace

ParticleEnsemble sample_particles(const InitialData& init, int n, std::uint64_t seed, int dim) {
  if (n <= 0) throw InvalidArgument("particle count must be positive");
  if (dim < 1 || dim > 2) throw InvalidArgument("particle dimension must be 1 or 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double total = init.total_mass();
  const double p_first = init.m1 / total;

  ParticleEnsemble e(dim, n);
  e.m.setConstant(total / n);
  for (int i = 0; i < n; ++i) {
    const bool first = init.kind == InitialData::Kind::Bump || unit(rng) < p_first;
    e.x(0, i) = draw_bump(rng, first ? init.x1 : init.x2, init.wx);
    e.v(0, i) = draw_bump(rng, first ? init.v1 : init.v2, init.wv);
    if (dim == 2) {
      e.x(1, i) = draw_bump(rng, 0.0, init.wx);
      e.v(1, i) = draw_bump(rng, 0.0, init.wv);
    }
  }
  return e;
}

}  // namespace flocklab
