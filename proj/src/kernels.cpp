#include "flocklab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "flocklab/errors.hpp"

namespace flocklab {

namespace {

constexpr double kPi = std::numbers::pi;

bool finite(double x) { return std::isfinite(x); }

/// Integral of the raw radial profile over R^dim.
double raw_integral(const Profile& p, int dim) {
  switch (p.shape) {
    case ProfileShape::Triangle:
      return dim == 1 ? 1.0 : kPi / 3.0;
    case ProfileShape::Bump2:
      return dim == 1 ? 16.0 / 15.0 : kPi / 3.0;
    case ProfileShape::Cosine:
      return dim == 1 ? 1.0 : kPi * (0.5 - 2.0 / (kPi * kPi));
    case ProfileShape::Table:
      break;
  }
  // Piecewise linear: trapezoid is exact in 1D; K(s) s is quadratic on each
  // segment so Simpson is exact in 2D.
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < p.radii.size(); ++k) {
    const double a = p.radii[k], b = p.radii[k + 1];
    const double fa = p.values[k], fb = p.values[k + 1];
    if (dim == 1) {
      total += 0.5 * (b - a) * (fa + fb);
    } else {
      const double m = 0.5 * (a + b);
      const double fm = 0.5 * (fa + fb);
      total += (b - a) / 6.0 * (fa * a + 4.0 * fm * m + fb * b);
    }
  }
  return dim == 1 ? 2.0 * total : 2.0 * kPi * total;
}

}  // namespace

InfluenceKernel make_influence(double lambda, double beta) {
  if (!finite(lambda) || lambda < 0.0) throw InvalidArgument("influence lambda must be finite and >= 0");
  if (!finite(beta) || beta <= 0.0) throw InvalidArgument("influence beta must be finite and > 0");
  InfluenceKernel k;
  k.lambda_ = lambda;
  k.beta_ = beta;
  k.form_ = InfluenceKernel::Form::Algebraic;
  return k;
}

InfluenceKernel make_constant_influence(double lambda) {
  if (!finite(lambda) || lambda < 0.0) throw InvalidArgument("influence lambda must be finite and >= 0");
  InfluenceKernel k;
  k.lambda_ = lambda;
  k.beta_ = 0.0;
  k.form_ = InfluenceKernel::Form::Constant;
  return k;
}

ProfileShape parse_profile_shape(std::string_view name) {
  if (name == "triangle") return ProfileShape::Triangle;
  if (name == "bump2") return ProfileShape::Bump2;
  if (name == "cosine") return ProfileShape::Cosine;
  if (name == "table") return ProfileShape::Table;
  throw InvalidArgument("unknown mollifier profile '" + std::string(name) + "'");
}

std::string to_string(ProfileShape shape) {
  switch (shape) {
    case ProfileShape::Triangle: return "triangle";
    case ProfileShape::Bump2: return "bump2";
    case ProfileShape::Cosine: return "cosine";
    case ProfileShape::Table: return "table";
  }
  return "?";
}

double Profile::operator()(double s) const {
  s = std::abs(s);
  switch (shape) {
    case ProfileShape::Triangle:
      return s < 1.0 ? 1.0 - s : 0.0;
    case ProfileShape::Bump2: {
      if (s >= 1.0) return 0.0;
      const double w = 1.0 - s * s;
      return w * w;
    }
    case ProfileShape::Cosine:
      return s < 1.0 ? 0.5 * (1.0 + std::cos(kPi * s)) : 0.0;
    case ProfileShape::Table: {
      if (s >= radii.back()) return 0.0;
      const auto it = std::upper_bound(radii.begin(), radii.end(), s);
      const auto k = std::size_t(it - radii.begin()) - 1;
      const double t = (s - radii[k]) / (radii[k + 1] - radii[k]);
      return (1.0 - t) * values[k] + t * values[k + 1];
    }
  }
  return 0.0;
}

Profile named_profile(ProfileShape shape) {
  if (shape == ProfileShape::Table) throw InvalidArgument("a table profile needs data; use load_profile_csv");
  return Profile{shape, {}, {}};
}

Profile parse_profile_csv(std::string_view text) {
  Profile p;
  p.shape = ProfileShape::Table;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double x = 0.0, k = 0.0;
    if (!(fields >> x >> k)) {
      // Tolerate a header row.
      if (p.radii.empty() && lineno == 1) continue;
      throw ParseError(lineno, "expected two numeric columns (x, K(x))");
    }
    p.radii.push_back(x);
    p.values.push_back(k);
  }
  if (p.radii.size() < 2) throw InvalidArgument("profile table needs at least two rows");
  if (p.radii.front() != 0.0) throw InvalidArgument("profile table must start at x = 0");
  for (std::size_t i = 0; i < p.radii.size(); ++i) {
    if (!finite(p.radii[i]) || !finite(p.values[i]) || p.values[i] < 0.0)
      throw InvalidArgument("profile table entries must be finite with K >= 0");
    if (i > 0 && p.radii[i] <= p.radii[i - 1]) throw InvalidArgument("profile table radii must increase");
  }
  return p;
}

Profile load_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open profile table " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_profile_csv(buffer.str());
}

Mollifier make_mollifier(const Profile& profile, double r, int dim) {
  if (!finite(r) || r <= 0.0) throw InvalidArgument("mollifier radius r must be finite and > 0");
  if (dim < 1 || dim > 2) throw InvalidArgument("mollifier dimension must be 1 or 2");

  Mollifier m;
  m.profile_ = profile;
  m.r_ = r;
  m.dim_ = dim;

  switch (profile.shape) {
    case ProfileShape::Triangle:
    case ProfileShape::Cosine:
      m.R1_ = 0.5;
      m.R2_ = 1.0;
      m.sup_raw_ = 1.0;
      m.inf_raw_ = 0.5;
      break;
    case ProfileShape::Bump2:
      m.R1_ = std::sqrt(1.0 - std::sqrt(0.5));
      m.R2_ = 1.0;
      m.sup_raw_ = 1.0;
      m.inf_raw_ = 0.5;
      break;
    case ProfileShape::Table: {
      const auto& xs = profile.radii;
      const auto& ks = profile.values;
      if (xs.size() < 2 || xs.size() != ks.size()) throw InvalidArgument("malformed profile table");
      if (ks.front() <= 0.0) throw InvalidArgument("profile must satisfy K(0) > 0");
      if (ks.back() != 0.0) throw InvalidArgument("profile must vanish at its last radius (bounded support)");
      std::size_t last = 0;
      for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] > 0.0) last = i;
      m.R2_ = xs[last + 1];
      const double half = 0.5 * ks.front();
      std::size_t k = 1;
      while (ks[k] > half) ++k;
      m.R1_ = xs[k - 1] + (ks[k - 1] - half) / (ks[k - 1] - ks[k]) * (xs[k] - xs[k - 1]);
      m.sup_raw_ = *std::max_element(ks.begin(), ks.end());
      m.inf_raw_ = half;
      break;
    }
  }
  m.norm_ = 1.0 / raw_integral(profile, dim);
  m.scale_ = std::pow(r, -dim);
  return m;
}

Mollifier Mollifier::with_radius(double r) const { return make_mollifier(profile_, r, dim_); }

Eigen::ArrayXd convolve(const Mollifier& kernel, const LineGrid& grid, const Eigen::ArrayXd& g) {
  if (g.size() != grid.cells) throw DomainMismatch("grid function size does not match the grid");
  if (kernel.dim() != 1) throw InvalidArgument("grid convolution is one-dimensional");
  const double dx = grid.spacing();
  if (kernel.support() < kMinCellsPerSupport * dx * (1.0 - 1e-12))
    throw UnresolvedKernel("mollifier support r*R2 = " + std::to_string(kernel.support()) +
                           " spans fewer than 4 cells of width " + std::to_string(dx));

  const int n = grid.cells;
  const int w = std::min(n - 1, int(std::floor(kernel.support() / dx)));
  Eigen::ArrayXd weights(2 * w + 1);
  for (int k = -w; k <= w; ++k) weights(k + w) = kernel(k * dx);
  // Unit discrete mass, so constants are reproduced whatever r / dx is.
  weights /= weights.sum();

  Eigen::ArrayXd out(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - w);
    const int hi = std::min(n - 1, i + w);
    out(i) = weights.segment(lo - i + w, hi - lo + 1).matrix().dot(g.segment(lo, hi - lo + 1).matrix());
  }
  return out;
}

Eigen::ArrayXd convolve(const InfluenceKernel& kernel, const LineGrid& grid, const Eigen::ArrayXd& g) {
  if (g.size() != grid.cells) throw DomainMismatch("grid function size does not match the grid");
  const int n = grid.cells;
  const double dx = grid.spacing();
  const Eigen::ArrayXd offsets = Eigen::ArrayXd::LinSpaced(n, 0.0, n - 1.0) * dx;
  const Eigen::ArrayXd table = kernel.of_squared(offsets.square()) * dx;

  Eigen::ArrayXd out(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    // Toeplitz row: table(|i - k|).
    double acc = table.head(i + 1).reverse().matrix().dot(g.head(i + 1).matrix());
    if (i + 1 < n) acc += table.segment(1, n - i - 1).matrix().dot(g.tail(n - i - 1).matrix());
    out(i) = acc;
  }
  return out;
}

int lattice_cover_count(double R1, double R2, int dim) {
  if (!(R1 > 0.0) || !(R2 > R1)) throw InvalidArgument("covering needs 0 < R1 < R2");
  if (dim < 1 || dim > 3) throw InvalidArgument("covering supports dimensions 1 to 3");
  // A cube of side R1/sqrt(d) is inscribed in a ball of radius R1/2.
  const double side = R1 / std::sqrt(double(dim));
  const int per_axis = int(std::ceil(2.0 * R2 / side));

  // Squared distance from the origin to the closest point of each slab.
  std::vector<double> slab(per_axis);
  for (int k = 0; k < per_axis; ++k) {
    const double a = -R2 + k * side, b = a + side;
    const double d = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(std::abs(a), std::abs(b));
    slab[k] = d * d;
  }
  const double R2sq = R2 * R2;
  int count = 0;
  if (dim == 1) {
    for (double s : slab) count += s < R2sq;
  } else if (dim == 2) {
    for (double s1 : slab)
      for (double s2 : slab) count += s1 + s2 < R2sq;
  } else {
    for (double s1 : slab)
      for (double s2 : slab)
        for (double s3 : slab) count += s1 + s2 + s3 < R2sq;
  }
  return count;
}

double mt_bound_constant(const Mollifier& m) {
  return m.sup_outer() / m.inf_inner() * lattice_cover_count(m.inner_radius(), m.outer_radius(), m.dim());
}

namespace {

Eigen::ArrayXd density_ratio(const Mollifier& m, const LineGrid& grid, const Eigen::ArrayXd& rho) {
  if (rho.size() != grid.cells) throw DomainMismatch("density size does not match the grid");
  if ((rho < 0.0).any()) throw InvalidArgument("density must be nonnegative");
  if (!(rho > 0.0).any()) throw InvalidArgument("density must not vanish identically");
  const Eigen::ArrayXd rho_t = convolve(m, grid, rho);
  Eigen::ArrayXd q = Eigen::ArrayXd::Zero(rho.size());
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho(i) == 0.0) continue;
    if (!(rho_t(i) > 0.0))
      throw VacuumRatio("weighted density vanishes at a cell carrying mass (x = " +
                        std::to_string(grid.center(int(i))) + ")");
    q(i) = rho(i) / rho_t(i);
  }
  return q;
}

}  // namespace

double mt_ratio_integral(const Mollifier& m, const LineGrid& grid, const Eigen::ArrayXd& rho, double y) {
  const Eigen::ArrayXd q = density_ratio(m, grid, rho);
  const Eigen::ArrayXd x = grid.centers();
  const int w = int(std::floor(m.support() / grid.spacing()));
  double mass = 0.0;
  for (int k = -w; k <= w; ++k) mass += m(k * grid.spacing());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i)
    if (q(i) != 0.0) acc += m(x(i) - y) * q(i);
  return acc / mass;
}

Eigen::ArrayXd mt_ratio_profile(const Mollifier& m, const LineGrid& grid, const Eigen::ArrayXd& rho) {
  // K is even, so sum_i K(x_i - y_k) q_i dx is the convolution K * q at y_k.
  return convolve(m, grid, density_ratio(m, grid, rho));
}

}  // namespace flocklab
