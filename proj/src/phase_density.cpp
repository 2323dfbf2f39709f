#include "flocklab/phase_density.hpp"

#include <cmath>

#include "flocklab/errors.hpp"

namespace flocklab {

Moments moments(const PhaseDensity& f) {
  const double dv = f.grid.dv();
  const Eigen::VectorXd v = f.grid.v.centers().matrix();
  const Eigen::MatrixXd& fm = f.f.matrix();
  Moments m;
  m.rho = (fm * Eigen::VectorXd::Ones(v.size())).array() * dv;
  m.j = (fm * v).array() * dv;
  m.s = (fm * v.cwiseAbs2()).array() * dv;
  return m;
}

Eigen::ArrayXd bulk_velocity(const Eigen::ArrayXd& rho, const Eigen::ArrayXd& j, double floor) {
  if (rho.size() != j.size()) throw DomainMismatch("rho and j must have the same size");
  return (rho > floor).select(j / rho, 0.0);
}

MomentField local_moments(const PhaseDensity& f) {
  const Moments m = moments(f);
  MomentField out;
  out.rho = m.rho;
  out.j = m.j;
  out.u = bulk_velocity(m.rho, m.j, vacuum_floor(m.rho));
  return out;
}

MomentField weighted_moments(const PhaseDensity& f, const Mollifier& m) {
  MomentField out = local_moments(f);
  out.rho_t = convolve(m, f.grid.x, out.rho);
  out.j_t = convolve(m, f.grid.x, out.j);
  out.u_t = bulk_velocity(out.rho_t, out.j_t, vacuum_floor(out.rho_t));
  return out;
}

double kinetic_energy(const PhaseDensity& f) {
  const Eigen::VectorXd half_v2 = 0.5 * f.grid.v.centers().square().matrix();
  return (f.f.matrix() * half_v2).sum() * f.grid.cell_volume();
}

double energy(const PhaseDensity& f, const ConfinementPotential& psi) {
  const Eigen::ArrayXd x = f.grid.x.centers();
  const Eigen::ArrayXd potential = 0.5 * psi.kappa * x.square();
  const double pot = (f.f.rowwise().sum() * potential).sum() * f.grid.cell_volume();
  return kinetic_energy(f) + pot;
}

Dissipations dissipations(const PhaseDensity& f, const Eigen::ArrayXd& u, const InfluenceKernel& phi) {
  if (u.size() != f.grid.x.cells) throw DomainMismatch("velocity field does not match the x-grid");
  const Eigen::ArrayXd v = f.grid.v.centers();
  const double vol = f.grid.cell_volume();

  Dissipations d;
  // (u_i - v_j)^2 as an outer difference.
  const Eigen::ArrayXXd rel = (u.matrix() * Eigen::RowVectorXd::Ones(v.size()) -
                               Eigen::VectorXd::Ones(u.size()) * v.matrix().transpose())
                                  .array();
  d.local = (f.f * rel.square()).sum() * vol;

  // |w - v|^2 = w^2 - 2 v w + v^2 and Phi is even:
  // D_CS = int rho (Phi * S) - int j (Phi * j).
  const Moments m = moments(f);
  const double dx = f.grid.dx();
  const Eigen::ArrayXd phi_s = convolve(phi, f.grid.x, m.s);
  const Eigen::ArrayXd phi_j = convolve(phi, f.grid.x, m.j);
  d.cs = ((m.rho * phi_s).sum() - (m.j * phi_j).sum()) * dx;
  return d;
}

double cs_dissipation_direct(const PhaseDensity& f, const InfluenceKernel& phi) {
  const auto& g = f.grid;
  const Eigen::ArrayXd x = g.x.centers();
  const Eigen::ArrayXd v = g.v.centers();
  double acc = 0.0;
  for (int i = 0; i < g.x.cells; ++i)
    for (int a = 0; a < g.v.cells; ++a)
      for (int k = 0; k < g.x.cells; ++k) {
        const double w = phi(x(i) - x(k));
        for (int b = 0; b < g.v.cells; ++b) {
          const double dvel = v(b) - v(a);
          acc += w * f.f(i, a) * f.f(k, b) * dvel * dvel;
        }
      }
  const double vol = g.cell_volume();
  return 0.5 * acc * vol * vol;
}

double lp_norm(const PhaseDensity& f, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("p must lie in [1, inf]");
  if (std::isinf(p)) return f.f.size() == 0 ? 0.0 : f.f.maxCoeff();
  return std::pow(f.f.pow(p).sum() * f.grid.cell_volume(), 1.0 / p);
}

double lp_norm(const Eigen::ArrayXd& g, double dx, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("p must lie in [1, inf]");
  if (std::isinf(p)) return g.size() == 0 ? 0.0 : g.abs().maxCoeff();
  return std::pow(g.abs().pow(p).sum() * dx, 1.0 / p);
}

MomentBounds moment_lp_bounds(double linf_f, double second_moment, double mass, double p_rho, double q_j,
                              const PhaseGrid& grid) {
  if (p_rho < 1.0 || p_rho > 3.0) throw InvalidArgument("rho bound needs p in [1, 3]");
  if (q_j < 1.0 || q_j > 1.5) throw InvalidArgument("j bound needs q in [1, 3/2]");
  // Pointwise: rho(x) <= ||f||_inf (2R + dv) + S(x) / R^2; the optimal R
  // gives rho <= 3 ||f||_inf^(2/3) S^(1/3) + ||f||_inf dv, whose cube is
  // integrable with int S = second_moment. Minkowski adds the dv term over
  // the x-domain.
  const double a = linf_f;
  const double rho3 = 3.0 * std::cbrt(a * a * second_moment) + a * grid.dv() * std::cbrt(2.0 * grid.x.half_width);
  // Interpolate between ||rho||_1 = mass and ||rho||_3.
  const double theta_rho = (1.0 / p_rho - 1.0 / 3.0) / (1.0 - 1.0 / 3.0);
  MomentBounds b;
  b.rho = std::pow(mass, theta_rho) * std::pow(rho3, 1.0 - theta_rho);
  // |j| <= S^(1/2) rho^(1/2), then Hoelder: ||j||_1 <= (int S)^(1/2) M^(1/2)
  // and ||j||_{3/2} <= (int S)^(1/2) ||rho||_3^(1/2).
  const double j1 = std::sqrt(second_moment * mass);
  const double j32 = std::sqrt(second_moment * rho3);
  const double theta_j = (1.0 / q_j - 2.0 / 3.0) / (1.0 - 2.0 / 3.0);
  b.j = std::pow(j1, theta_j) * std::pow(j32, 1.0 - theta_j);
  return b;
}

}  // namespace flocklab
