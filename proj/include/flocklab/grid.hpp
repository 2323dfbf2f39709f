#pragma once

#include <Eigen/Core>

namespace flocklab {

/// Uniform cell-centred grid on the symmetric interval [-half_width, half_width].
struct LineGrid {
  double half_width = 1.0;
  int cells = 1;

  double spacing() const { return 2.0 * half_width / cells; }
  double center(int i) const { return -half_width + (i + 0.5) * spacing(); }
  double face(int k) const { return -half_width + k * spacing(); }

  Eigen::ArrayXd centers() const {
    return Eigen::ArrayXd::NullaryExpr(cells, [this](Eigen::Index i) { return center(int(i)); });
  }
  Eigen::ArrayXd faces() const {
    return Eigen::ArrayXd::NullaryExpr(cells + 1, [this](Eigen::Index k) { return face(int(k)); });
  }

  bool operator==(const LineGrid&) const = default;
};

/// Phase-space grid: x in [-Lx, Lx] by v in [-Lv, Lv].
struct PhaseGrid {
  LineGrid x;
  LineGrid v;

  double dx() const { return x.spacing(); }
  double dv() const { return v.spacing(); }
  double cell_volume() const { return dx() * dv(); }

  bool operator==(const PhaseGrid&) const = default;
};

}  // namespace flocklab
