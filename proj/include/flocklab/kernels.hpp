#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flocklab/grid.hpp"

namespace flocklab {

/// Influence function Phi(x) = lambda * (1 + |x|^2)^(-beta), or the flat
/// kernel Phi = lambda used to emulate the beta -> 0 limit.
class InfluenceKernel {
 public:
  enum class Form { Algebraic, Constant };

  InfluenceKernel() = default;

  double lambda() const { return lambda_; }
  double beta() const { return beta_; }
  Form form() const { return form_; }

  /// Phi as a function of the squared distance.
  double of_squared(double d2) const {
    if (form_ == Form::Constant) return lambda_;
    if (beta_ == 1.0) return lambda_ / (1.0 + d2);
    return lambda_ * std::exp(-beta_ * std::log1p(d2));
  }
  double operator()(double x) const { return of_squared(x * x); }

  /// Vectorised evaluation on squared distances.
  template <typename Derived>
  Eigen::ArrayXd of_squared(const Eigen::ArrayBase<Derived>& d2) const {
    if (form_ == Form::Constant) return Eigen::ArrayXd::Constant(d2.size(), lambda_);
    if (beta_ == 1.0) return lambda_ / (1.0 + d2);
    return lambda_ * (-beta_ * d2.log1p()).exp();
  }

  /// ||Phi||_inf, attained at the origin.
  double sup_norm() const { return lambda_; }

  bool operator==(const InfluenceKernel&) const = default;

 private:
  friend InfluenceKernel make_influence(double, double);
  friend InfluenceKernel make_constant_influence(double);

  double lambda_ = 0.0;
  double beta_ = 1.0;
  Form form_ = Form::Algebraic;
};

InfluenceKernel make_influence(double lambda, double beta);
InfluenceKernel make_constant_influence(double lambda);

enum class ProfileShape { Triangle, Bump2, Cosine, Table };

ProfileShape parse_profile_shape(std::string_view name);
std::string to_string(ProfileShape shape);

/// Radial base profile K on the unit scale, before normalisation. Named
/// shapes are analytic; `Table` is piecewise linear in the radius.
struct Profile {
  ProfileShape shape = ProfileShape::Triangle;
  std::vector<double> radii;   // Table only: increasing, starting at 0
  std::vector<double> values;  // Table only: last value is 0

  double operator()(double radius) const;
  bool operator==(const Profile&) const = default;
};

Profile named_profile(ProfileShape shape);

/// Loads a radial profile from two-column CSV (x, K(x)), x >= 0.
Profile load_profile_csv(const std::filesystem::path& path);
Profile parse_profile_csv(std::string_view text);

/// The scaled mollifier K^r(x) = r^(-d) K(x / r), with K normalised so that
/// its integral over R^d is one.
class Mollifier {
 public:
  const Profile& profile() const { return profile_; }
  double r() const { return r_; }
  int dim() const { return dim_; }
  /// Inner radius: K > 0 on the closed ball (half-peak radius).
  double inner_radius() const { return R1_; }
  /// Outer radius: K = 0 outside the open ball.
  double outer_radius() const { return R2_; }
  /// Support radius of K^r.
  double support() const { return R2_ * r_; }
  /// Factor applied to the raw profile so that its integral is one.
  double normalization() const { return norm_; }

  /// Normalised unit-scale profile at a radius.
  double base(double radius) const { return norm_ * profile_(radius); }
  /// K^r at a radius.
  double at_radius(double radius) const { return scale_ * base(radius / r_); }
  double operator()(double x) const { return at_radius(std::abs(x)); }

  /// sup of K over B_{R2} and inf of K over the closed B_{R1}, unit scale.
  double sup_outer() const { return norm_ * sup_raw_; }
  double inf_inner() const { return norm_ * inf_raw_; }

  /// Same base profile at another radius.
  Mollifier with_radius(double r) const;

 private:
  friend Mollifier make_mollifier(const Profile&, double, int);

  Profile profile_;
  double r_ = 1.0;
  int dim_ = 1;
  double R1_ = 0.5;
  double R2_ = 1.0;
  double norm_ = 1.0;
  double scale_ = 1.0;
  double sup_raw_ = 1.0;
  double inf_raw_ = 0.5;
};

Mollifier make_mollifier(const Profile& profile, double r, int dim = 1);
inline Mollifier make_mollifier(ProfileShape shape, double r, int dim = 1) {
  return make_mollifier(named_profile(shape), r, dim);
}

/// Smallest grid-resolution the convolution accepts: r * R2 >= 4 dx.
inline constexpr double kMinCellsPerSupport = 4.0;

/// Midpoint-rule convolution on the solver grid. The mollifier version only
/// visits cells within its support, rescales its weights to sum to one, and
/// throws UnresolvedKernel when the support spans fewer than four cells.
Eigen::ArrayXd convolve(const Mollifier& kernel, const LineGrid& grid, const Eigen::ArrayXd& g);
Eigen::ArrayXd convolve(const InfluenceKernel& kernel, const LineGrid& grid, const Eigen::ArrayXd& g);

/// Number of cubes of a regular lattice, each inscribed in a ball of radius
/// R1/2, needed to cover B_{R2}(0) in dimension `dim`.
int lattice_cover_count(double R1, double R2, int dim);

/// (sup_{B_R2} K / inf_{B_R1} K) * N_cover, on the unit-scale profile, so the
/// result does not depend on r.
double mt_bound_constant(const Mollifier& m);

/// int K^r(x - y) rho(x) / rho_tilde(x) dx with rho_tilde = K^r * rho and the
/// integrand set to 0 where rho vanishes.
double mt_ratio_integral(const Mollifier& m, const LineGrid& grid, const Eigen::ArrayXd& rho, double y);

/// mt_ratio_integral evaluated at every cell centre y = x_i.
Eigen::ArrayXd mt_ratio_profile(const Mollifier& m, const LineGrid& grid, const Eigen::ArrayXd& rho);

}  // namespace flocklab
