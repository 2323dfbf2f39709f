#include "flocklab/particle_solver.hpp"

#include <algorithm>
#include <cmath>

#include "flocklab/errors.hpp"

namespace flocklab {

CellList::CellList(const Eigen::MatrixXd& x, double h) : dim_(int(x.rows())), h_(h) {
  if (!(h > 0.0)) throw InvalidArgument("cell width must be positive");
  const int n = int(x.cols());
  origin_ = n > 0 ? Eigen::VectorXd(x.rowwise().minCoeff()) : Eigen::VectorXd::Zero(dim_);
  const Eigen::VectorXd extent = n > 0 ? Eigen::VectorXd(x.rowwise().maxCoeff() - origin_) : Eigen::VectorXd::Zero(dim_);
  bins_.resize(dim_);
  for (int a = 0; a < dim_; ++a) bins_(a) = std::max(1, int(std::floor(extent(a) / h_)) + 1);

  cell_of_.resize(n);
  int total = 1;
  for (int a = 0; a < dim_; ++a) total *= bins_(a);
  std::vector<int> count(total + 1, 0);
  Eigen::VectorXi c(dim_);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < dim_; ++a) c(a) = std::min(bins_(a) - 1, int((x(a, i) - origin_(a)) / h_));
    cell_of_[i] = cell_index(c);
    ++count[cell_of_[i] + 1];
  }
  // Counting sort keeps particles of a bin in index order.
  start_.assign(total + 1, 0);
  for (int k = 0; k < total; ++k) start_[k + 1] = start_[k] + count[k + 1];
  order_.resize(n);
  std::vector<int> fill(start_.begin(), start_.end() - 1);
  for (int i = 0; i < n; ++i) order_[fill[cell_of_[i]]++] = i;
}

int CellList::cell_index(const Eigen::VectorXi& c) const {
  int idx = 0;
  for (int a = dim_ - 1; a >= 0; --a) idx = idx * bins_(a) + c(a);
  return idx;
}

namespace {

void add_confinement(const ParticleEnsemble& e, const ParticleModel& model, Eigen::MatrixXd& acc) {
  if (model.psi.kappa != 0.0) acc -= model.psi.kappa * e.x;
}

/// For dim = 1: per particle i the sums s0 = sum_j w_ij, s1 = sum_j w_ij v_j and
/// (optionally) s2 = sum_j w_ij v_j^2 with w_ij = m_j Phi(x_j - x_i).
Eigen::ArrayX3d influence_sums_1d(const ParticleEnsemble& e, const InfluenceKernel& phi, bool second) {
  const int n = e.size();
  const Eigen::ArrayXd x = e.x.row(0).transpose().array();
  const Eigen::ArrayXd m = e.m.array();
  const Eigen::ArrayXd v = e.v.row(0).transpose().array();
  const Eigen::ArrayXd mv = m * v;
  const Eigen::ArrayXd mv2 = mv * v;
  const double lambda = phi.lambda();
  const double beta = phi.beta();
  const auto form = phi.form();
  Eigen::ArrayX3d out(n, 3);
#pragma omp parallel
  {
    // One buffer per thread; a fresh allocation per particle is far slower.
    Eigen::ArrayXd w(n);
#pragma omp for schedule(static)
    for (int i = 0; i < n; ++i) {
      if (form == InfluenceKernel::Form::Constant) {
        w.setConstant(lambda);
      } else if (beta == 1.0) {
        w = lambda / (1.0 + (x - x(i)).square());
      } else {
        w = lambda * (-beta * (x - x(i)).square().log1p()).exp();
      }
      out(i, 0) = (w * m).sum();
      out(i, 1) = (w * mv).sum();
      out(i, 2) = second ? (w * mv2).sum() : 0.0;
    }
  }
  return out;
}

void add_cucker_smale(const ParticleEnsemble& e, const InfluenceKernel& phi, Eigen::MatrixXd& acc) {
  if (phi.lambda() == 0.0) return;
  const int n = e.size();
  if (e.dim == 1) {
    const Eigen::ArrayX3d s = influence_sums_1d(e, phi, false);
    acc.row(0) += (s.col(1) - e.v.row(0).transpose().array() * s.col(0)).matrix().transpose();
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const Eigen::ArrayXd d2 = (e.x.colwise() - e.x.col(i)).colwise().squaredNorm().transpose().array();
    const Eigen::VectorXd w = (e.m.array() * phi.of_squared(d2)).matrix();
    acc.col(i) += e.v * w - e.v.col(i) * w.sum();
  }
}

/// Numerator and denominator of the normalised alignment sum at particle i.
template <typename Neighbours>
void mt_sums(const ParticleEnsemble& e, const Mollifier& k, int i, Neighbours&& neighbours, Eigen::VectorXd& num,
             double& den) {
  const double h = k.support();
  num.setZero();
  den = 0.0;
  neighbours([&](int j) {
    const double d = (e.x.col(j) - e.x.col(i)).norm();
    if (d >= h) return;
    const double w = e.m(j) * k.at_radius(d);
    num += w * e.v.col(j);
    den += w;
  });
}

template <typename Neighbours>
Eigen::MatrixXd mt_average(const ParticleEnsemble& e, const Mollifier& k, Neighbours&& near) {
  const int n = e.size();
  Eigen::MatrixXd out(e.dim, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd num(e.dim);
    double den = 0.0;
    mt_sums(e, k, i, [&](auto&& visit) { near(i, visit); }, num, den);
    // Self-interaction keeps den >= m_i K^r(0) > 0.
    out.col(i) = num / den;
  }
  return out;
}

/// dim = 1: particles sorted by position, neighbours found by a sliding window.
Eigen::MatrixXd mt_average_sorted(const ParticleEnsemble& e, const Mollifier& k) {
  const int n = e.size();
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return e.x(0, a) < e.x(0, b); });
  std::vector<double> xs(n), ms(n), vs(n);
  for (int p = 0; p < n; ++p) {
    xs[p] = e.x(0, order[p]);
    ms[p] = e.m(order[p]);
    vs[p] = e.v(0, order[p]);
  }
  const double h = k.support();
  Eigen::MatrixXd out(1, n);
  // The ratio num / den does not see constant factors of the kernel, so named
  // profiles are evaluated inline on the unit scale.
  auto sweep = [&](auto kernel) {
    int lo = 0, hi = 0;
    for (int p = 0; p < n; ++p) {
      while (xs[lo] <= xs[p] - h) ++lo;
      while (hi < n && xs[hi] < xs[p] + h) ++hi;
      double num = 0.0, den = 0.0;
      for (int q = lo; q < hi; ++q) {
        const double w = ms[q] * kernel(std::abs(xs[q] - xs[p]));
        num += w * vs[q];
        den += w;
      }
      out(0, order[p]) = num / den;
    }
  };
  const double inv_r = 1.0 / k.r();
  switch (k.profile().shape) {
    case ProfileShape::Triangle:
      sweep([inv_r](double d) { return std::max(0.0, 1.0 - d * inv_r); });
      break;
    case ProfileShape::Bump2:
      sweep([inv_r](double d) {
        const double s = d * inv_r;
        const double w = s < 1.0 ? 1.0 - s * s : 0.0;
        return w * w;
      });
      break;
    default:
      sweep([&k](double d) { return k.at_radius(d); });
      break;
  }
  return out;
}

Eigen::MatrixXd mt_average_cells(const ParticleEnsemble& e, const Mollifier& k) {
  if (e.dim == 1) return mt_average_sorted(e, k);
  const CellList cells(e.x, k.support());
  return mt_average(e, k, [&](int i, auto&& visit) { cells.for_each_near(i, visit); });
}

Eigen::MatrixXd mt_average_direct(const ParticleEnsemble& e, const Mollifier& k) {
  const int n = e.size();
  return mt_average(e, k, [n](int, auto&& visit) {
    for (int j = 0; j < n; ++j) visit(j);
  });
}

}  // namespace

Eigen::MatrixXd accelerations(const ParticleEnsemble& e, const ParticleModel& model) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(e.dim, e.size());
  add_confinement(e, model, acc);
  add_cucker_smale(e, model.phi, acc);
  if (model.mollifier) acc += mt_average_cells(e, *model.mollifier) - e.v;
  return acc;
}

Eigen::MatrixXd accelerations_direct(const ParticleEnsemble& e, const ParticleModel& model) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(e.dim, e.size());
  add_confinement(e, model, acc);
  add_cucker_smale(e, model.phi, acc);
  if (model.mollifier) acc += mt_average_direct(e, *model.mollifier) - e.v;
  return acc;
}

Eigen::MatrixXd mt_velocities(const ParticleEnsemble& e, const Mollifier& m) { return mt_average_cells(e, m); }

ParticleEnsemble step_rk4(const ParticleEnsemble& e, const ParticleModel& model, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
  auto shifted = [&](const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dv, double h) {
    ParticleEnsemble s = e;
    s.x += h * dx;
    s.v += h * dv;
    return s;
  };
  const Eigen::MatrixXd k1x = e.v;
  const Eigen::MatrixXd k1v = accelerations(e, model);
  const ParticleEnsemble s2 = shifted(k1x, k1v, 0.5 * dt);
  const Eigen::MatrixXd k2x = s2.v;
  const Eigen::MatrixXd k2v = accelerations(s2, model);
  const ParticleEnsemble s3 = shifted(k2x, k2v, 0.5 * dt);
  const Eigen::MatrixXd k3x = s3.v;
  const Eigen::MatrixXd k3v = accelerations(s3, model);
  const ParticleEnsemble s4 = shifted(k3x, k3v, dt);
  const Eigen::MatrixXd k4x = s4.v;
  const Eigen::MatrixXd k4v = accelerations(s4, model);

  ParticleEnsemble out = e;
  out.x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  out.t = e.t + dt;
  if (!out.x.allFinite() || !out.v.allFinite())
    throw NonFiniteState("particle state became non-finite at t = " + std::to_string(out.t));
  return out;
}

double cardinal_bspline(int degree, double s) {
  const double half = 0.5 * (degree + 1);
  if (std::abs(s) >= half) return 0.0;
  s = -std::abs(s);  // fewer nonzero terms on the left half
  // Truncated-power form: (1/p!) sum_k (-1)^k C(p+1, k) (s + half - k)_+^p.
  double acc = 0.0, binom = 1.0, fact = 1.0;
  for (int k = 1; k <= degree; ++k) fact *= k;
  for (int k = 0; k <= degree + 1; ++k) {
    const double t = s + half - k;
    if (t > 0.0) acc += (k % 2 ? -1.0 : 1.0) * binom * std::pow(t, degree);
    binom = binom * (degree + 1 - k) / (k + 1);
  }
  return acc / fact;
}

namespace {

struct Stencil {
  int first = 0;
  std::vector<double> w;
};

Stencil stencil(const LineGrid& g, double pos, int width) {
  const int degree = 2 * width - 1;
  const double s = (pos + g.half_width) / g.spacing() - 0.5;  // cell-centre coordinate
  Stencil st;
  st.first = int(std::ceil(s - width));
  const int last = int(std::floor(s + width));
  if (!std::isfinite(s) || st.first < 0 || last >= g.cells)
    throw ParticleOutsideDomain("particle at " + std::to_string(pos) + " does not fit inside [-" +
                                std::to_string(g.half_width) + ", " + std::to_string(g.half_width) + "]");
  double total = 0.0;
  for (int i = st.first; i <= last; ++i) {
    st.w.push_back(cardinal_bspline(degree, i - s));
    total += st.w.back();
  }
  for (double& w : st.w) w /= total;
  return st;
}

}  // namespace

PhaseDensity deposit(const ParticleEnsemble& e, const PhaseGrid& grid, int width) {
  if (e.dim != 1) throw InvalidArgument("deposition onto the phase grid needs dim = 1");
  if (width < 2) throw InvalidArgument("deposition width must be at least 2 cells");
  PhaseDensity f(grid, e.t);
  const double inv_vol = 1.0 / grid.cell_volume();
  for (int p = 0; p < e.size(); ++p) {
    const Stencil sx = stencil(grid.x, e.x(0, p), width);
    const Stencil sv = stencil(grid.v, e.v(0, p), width);
    for (std::size_t b = 0; b < sv.w.size(); ++b)
      for (std::size_t a = 0; a < sx.w.size(); ++a)
        f.f(sx.first + int(a), sv.first + int(b)) += e.m(p) * sx.w[a] * sv.w[b] * inv_vol;
  }
  return f;
}

DiagnosticsRow particle_diagnostics(const ParticleEnsemble& e, const ParticleModel& model, double align_constant,
                                    const std::optional<PhaseGrid>& grid, double p) {
  DiagnosticsRow row;
  row.t = e.t;
  row.mass = e.total_mass();
  const Eigen::VectorXd mom = e.momentum();
  row.momentum = e.dim == 1 ? mom(0) : mom.norm();
  const Eigen::ArrayXd v2 = e.v.colwise().squaredNorm().transpose().array();
  const Eigen::ArrayXd x2 = e.x.colwise().squaredNorm().transpose().array();
  row.energy = (e.m.array() * (0.5 * v2 + 0.5 * model.psi.kappa * x2)).sum();

  if (model.mollifier) {
    const Eigen::MatrixXd ut = mt_velocities(e, *model.mollifier);
    row.d_local = (e.m.array() * (ut - e.v).colwise().squaredNorm().transpose().array()).sum();
    row.lbound_lhs = (e.m.array() * (e.v.cwiseProduct(ut - e.v)).colwise().sum().transpose().array()).sum();
    row.lbound_rhs = align_constant * row.energy - 0.5 * row.d_local;
  }

  if (model.phi.lambda() != 0.0) {
    double acc = 0.0;
    const int n = e.size();
    if (e.dim == 1) {
      // sum_j w_ij |v_j - v_i|^2 = s2 - 2 v_i s1 + v_i^2 s0
      const Eigen::ArrayX3d s = influence_sums_1d(e, model.phi, true);
      const Eigen::ArrayXd v = e.v.row(0).transpose().array();
      acc = (e.m.array() * (s.col(2) - 2.0 * v * s.col(1) + v.square() * s.col(0))).sum();
    } else {
#pragma omp parallel for reduction(+ : acc) schedule(static)
      for (int i = 0; i < n; ++i) {
        const Eigen::ArrayXd d2 = (e.x.colwise() - e.x.col(i)).colwise().squaredNorm().transpose().array();
        const Eigen::ArrayXd w = e.m.array() * model.phi.of_squared(d2);
        acc += e.m(i) * ((w * v2).sum() - 2.0 * e.v.col(i).dot(e.v * w.matrix()) + v2(i) * w.sum());
      }
    }
    row.d_cs = 0.5 * acc;
  }

  if (grid && e.dim == 1) {
    try {
      const PhaseDensity f = deposit(e, *grid, 2);
      row.linf_f = lp_norm(f, kInfinity);
      row.lp_f = lp_norm(f, p);
    } catch (const ParticleOutsideDomain&) {
      row.linf_f = row.lp_f = 0.0;
    }
  }
  return row;
}

ParticleRun run_particles(const ParticleEnsemble& e0, const ParticleModel& model, const ParticleRunOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.t_end > 0.0)) throw InvalidArgument("dt and t_end must be positive");
  const long steps = std::max(1L, std::lround(opts.t_end / opts.dt));
  const double dt = opts.t_end / double(steps);
  const long every = opts.snapshot_stride > 0.0 ? std::max(1L, std::lround(opts.snapshot_stride / dt)) : steps;
  const double c = model.mollifier ? mt_bound_constant(*model.mollifier) : 0.0;

  ParticleRun run;
  auto record = [&](const ParticleEnsemble& e) {
    run.rows.push_back(particle_diagnostics(e, model, c, opts.grid, opts.lp));
    run.snapshots.push_back(e);
    if (opts.on_row) opts.on_row(run.rows.back());
  };

  ParticleEnsemble e = e0;
  record(e);
  for (long s = 1; s <= steps; ++s) {
    e = step_rk4(e, model, dt);
    e.t = e0.t + s * dt;
    if (s % every == 0 || s == steps) record(e);
  }
  return run;
}

}  // namespace flocklab
