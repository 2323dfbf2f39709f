#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "flocklab/grid.hpp"
#include "flocklab/kernels.hpp"
#include "flocklab/phase_density.hpp"

namespace flocklab {

/// N agents in dimension 1 or 2. Columns of `x` and `v` are particles.
struct ParticleEnsemble {
  int dim = 1;
  Eigen::MatrixXd x;
  Eigen::MatrixXd v;
  Eigen::VectorXd m;
  double t = 0.0;

  ParticleEnsemble() = default;
  ParticleEnsemble(int d, int n)
      : dim(d), x(Eigen::MatrixXd::Zero(d, n)), v(Eigen::MatrixXd::Zero(d, n)), m(Eigen::VectorXd::Ones(n)) {}

  int size() const { return int(m.size()); }
  double total_mass() const { return m.sum(); }
  Eigen::VectorXd momentum() const { return v * m; }
};

/// Mass-weighted Cucker-Smale sum, optional normalised Motsch-Tadmor sum, confinement.
struct ParticleModel {
  InfluenceKernel phi;
  std::optional<Mollifier> mollifier;  // empty: alignment term off
  ConfinementPotential psi;
};

/// Uniform bins of width `h` over the bounding box of the positions.
class CellList {
 public:
  CellList(const Eigen::MatrixXd& x, double h);

  /// Calls visit(j) for every particle j in the 3^d bins around particle i.
  template <typename Visit>
  void for_each_near(int i, Visit&& visit) const;

 private:
  int dim_;
  double h_;
  Eigen::VectorXd origin_;
  Eigen::VectorXi bins_;
  std::vector<int> cell_of_;
  std::vector<int> start_;
  std::vector<int> order_;
  int cell_index(const Eigen::VectorXi& c) const;
};

/// a_i = -grad Psi(x_i) + sum_j m_j Phi(x_i - x_j)(v_j - v_i)
///       + sum_j m_j K^r(x_i - x_j)(v_j - v_i) / sum_j m_j K^r(x_i - x_j).
/// Self-interaction is included; the alignment sums use a cell list.
Eigen::MatrixXd accelerations(const ParticleEnsemble& e, const ParticleModel& model);

/// Same as accelerations but with O(N^2) alignment sums.
Eigen::MatrixXd accelerations_direct(const ParticleEnsemble& e, const ParticleModel& model);

/// K^r-averaged velocity u_t(x_i) seen by every particle.
Eigen::MatrixXd mt_velocities(const ParticleEnsemble& e, const Mollifier& m);

/// Classical fourth-order Runge-Kutta step. Throws NonFiniteState.
ParticleEnsemble step_rk4(const ParticleEnsemble& e, const ParticleModel& model, double dt);

/// Deposits each particle with a tensor-product centred B-spline of half-width
/// `width` cells (degree 2 width - 1) onto a phase grid. Throws
/// ParticleOutsideDomain when a stencil leaves the grid.
PhaseDensity deposit(const ParticleEnsemble& e, const PhaseGrid& grid, int width = 2);

/// Centred cardinal B-spline of the given degree (support [-(p+1)/2, (p+1)/2]).
double cardinal_bspline(int degree, double s);

/// Diagnostics from particle sums. L^p norms use a deposit on `grid` when
/// dim = 1 and every stencil fits; otherwise they are reported as 0.
DiagnosticsRow particle_diagnostics(const ParticleEnsemble& e, const ParticleModel& model, double align_constant,
                                    const std::optional<PhaseGrid>& grid, double p);

struct ParticleRun {
  std::vector<DiagnosticsRow> rows;
  std::vector<ParticleEnsemble> snapshots;
};

struct ParticleRunOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  double snapshot_stride = 0.0;  // 0: only the initial and final states
  double lp = 2.0;
  std::optional<PhaseGrid> grid;
  std::function<void(const DiagnosticsRow&)> on_row;
};

/// Fixed-step RK4 integration with diagnostics and snapshots at every
/// multiple of the stride (and at t_end).
ParticleRun run_particles(const ParticleEnsemble& e0, const ParticleModel& model, const ParticleRunOptions& opts);

template <typename Visit>
void CellList::for_each_near(int i, Visit&& visit) const {
  const int home = cell_of_[i];
  Eigen::VectorXi c(dim_);
  int rem = home;
  for (int a = 0; a < dim_; ++a) {
    c(a) = rem % bins_(a);
    rem /= bins_(a);
  }
  const int span = dim_ == 1 ? 3 : 9;
  for (int o = 0; o < span; ++o) {
    Eigen::VectorXi n = c;
    int code = o;
    bool inside = true;
    for (int a = 0; a < dim_; ++a) {
      n(a) += code % 3 - 1;
      code /= 3;
      inside = inside && n(a) >= 0 && n(a) < bins_(a);
    }
    if (!inside) continue;
    const int cell = cell_index(n);
    for (int k = start_[cell]; k < start_[cell + 1]; ++k) visit(order_[k]);
  }
}

}  // namespace flocklab
