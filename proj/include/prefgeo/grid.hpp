#ifndef PREFGEO_GRID_HPP
#define PREFGEO_GRID_HPP

// Bounded study region, its uniform lattice discretization, and
// centroid distances. Irregular regions are handled with a per-cell
// inclusion mask over the lattice; masked-out cells do not count
// towards the cell total M.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "prefgeo/common.hpp"

namespace prefgeo {

struct Region {
  int dimension = 1;
  std::array<double, 2> lo{0.0, 0.0};
  std::array<double, 2> hi{1.0, 1.0};

  static Region interval(double a, double b) {
    Region r;
    r.dimension = 1;
    r.lo = {a, 0.0};
    r.hi = {b, 1.0};
    r.validate();
    return r;
  }

  static Region box(double ax, double bx, double ay, double by) {
    Region r;
    r.dimension = 2;
    r.lo = {ax, ay};
    r.hi = {bx, by};
    r.validate();
    return r;
  }

  void validate() const {
    require(dimension == 1 || dimension == 2, "region: dimension must be 1 or 2");
    for (int a = 0; a < dimension; ++a)
      require(lo[a] < hi[a], "region: lower bound must be below upper bound");
  }

  double measure() const {
    double m = hi[0] - lo[0];
    if (dimension == 2) m *= hi[1] - lo[1];
    return m;
  }
};

class Grid {
 public:
  /// Uniform partition of `region` into axis-aligned boxes, centroids at
  /// geometric centers. All cells start active.
  static Grid build(const Region& region, const std::vector<int>& cells_per_axis) {
    region.validate();
    require(static_cast<int>(cells_per_axis.size()) == region.dimension,
            "build_grid: cells_per_axis must match region dimension");
    for (int c : cells_per_axis)
      require(c > 0, "build_grid: cell count must be positive on every axis");
    Grid g;
    g.region_ = region;
    g.nx_ = cells_per_axis[0];
    g.ny_ = region.dimension == 2 ? cells_per_axis[1] : 1;
    g.lattice_to_active_.assign(static_cast<std::size_t>(g.nx_) * g.ny_, 0);
    g.active_to_lattice_.resize(g.lattice_to_active_.size());
    for (std::size_t i = 0; i < g.lattice_to_active_.size(); ++i) {
      g.lattice_to_active_[i] = static_cast<std::int32_t>(i);
      g.active_to_lattice_[i] = static_cast<std::int32_t>(i);
    }
    return g;
  }

  /// Copy of the grid keeping only cells with keep[lattice_id] set.
  Grid masked(const std::vector<bool>& keep) const {
    require(keep.size() == lattice_to_active_.size(),
            "masked: mask length must equal lattice size");
    Grid g;
    g.region_ = region_;
    g.nx_ = nx_;
    g.ny_ = ny_;
    g.lattice_to_active_.assign(keep.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      if (!keep[i]) continue;
      g.lattice_to_active_[i] = static_cast<std::int32_t>(g.active_to_lattice_.size());
      g.active_to_lattice_.push_back(static_cast<std::int32_t>(i));
    }
    require(!g.active_to_lattice_.empty(), "masked: at least one cell must stay active");
    return g;
  }

  const Region& region() const { return region_; }
  int dimension() const { return region_.dimension; }
  int cell_count() const { return static_cast<int>(active_to_lattice_.size()); }
  int lattice_size() const { return nx_ * ny_; }
  int cells_x() const { return nx_; }
  int cells_y() const { return ny_; }
  bool is_masked() const { return cell_count() != lattice_size(); }

  double cell_width_x() const { return (region_.hi[0] - region_.lo[0]) / nx_; }
  double cell_width_y() const {
    return dimension() == 2 ? (region_.hi[1] - region_.lo[1]) / ny_ : 1.0;
  }

  /// Cell volume Δ (identical across cells of a uniform partition).
  double volume(int /*cell*/ = 0) const {
    double v = cell_width_x();
    if (dimension() == 2) v *= cell_width_y();
    return v;
  }

  double total_volume() const { return volume() * cell_count(); }

  int lattice_of(int cell) const { return active_to_lattice_.at(cell); }
  int active_of(int lattice) const { return lattice_to_active_.at(lattice); }

  Eigen::Vector2d centroid(int cell) const {
    const int li = lattice_of(cell);
    const int ix = li % nx_;
    const int iy = li / nx_;
    Eigen::Vector2d c(region_.lo[0] + (ix + 0.5) * cell_width_x(), 0.0);
    if (dimension() == 2) c[1] = region_.lo[1] + (iy + 0.5) * cell_width_y();
    return c;
  }

  /// M x dim matrix of active-cell centroids.
  Eigen::MatrixXd centroids() const {
    Eigen::MatrixXd c(cell_count(), dimension());
    for (int i = 0; i < cell_count(); ++i) {
      const auto p = centroid(i);
      for (int a = 0; a < dimension(); ++a) c(i, a) = p[a];
    }
    return c;
  }

  double distance(int a, int b) const { return (centroid(a) - centroid(b)).norm(); }

  /// Active cell one lattice step along `axis` (0 or 1) in direction
  /// `sign`; -1 when the step leaves the grid or lands on a masked cell.
  int lattice_step(int cell, int axis, int sign) const {
    const int li = lattice_of(cell);
    int ix = li % nx_;
    int iy = li / nx_;
    (axis == 0 ? ix : iy) += sign;
    if (ix < 0 || ix >= nx_ || iy < 0 || iy >= ny_) return -1;
    return lattice_to_active_[static_cast<std::size_t>(iy) * nx_ + ix];
  }

  /// Active lattice neighbors (2*dim-adjacency) of an active cell.
  std::vector<int> neighbors(int cell) const {
    std::vector<int> out;
    const int li = lattice_of(cell);
    const int ix = li % nx_;
    const int iy = li / nx_;
    auto push = [&](int jx, int jy) {
      if (jx < 0 || jx >= nx_ || jy < 0 || jy >= ny_) return;
      const int a = lattice_to_active_[static_cast<std::size_t>(jy) * nx_ + jx];
      if (a >= 0) out.push_back(a);
    };
    push(ix - 1, iy);
    push(ix + 1, iy);
    if (dimension() == 2) {
      push(ix, iy - 1);
      push(ix, iy + 1);
    }
    return out;
  }

 private:
  Region region_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::int32_t> active_to_lattice_;
  std::vector<std::int32_t> lattice_to_active_;  // -1 where masked out
};

inline Grid build_grid(const Region& region, const std::vector<int>& cells_per_axis) {
  return Grid::build(region, cells_per_axis);
}

/// Symmetric matrix of Euclidean distances between active-cell centroids.
inline Eigen::MatrixXd pairwise_distances(const Grid& grid) {
  const int m = grid.cell_count();
  Eigen::MatrixXd d(m, m);
  for (int i = 0; i < m; ++i) {
    d(i, i) = 0.0;
    const auto ci = grid.centroid(i);
    for (int j = i + 1; j < m; ++j) {
      const double v = (ci - grid.centroid(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace prefgeo

#endif
