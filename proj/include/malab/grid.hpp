#pragma once

#include "malab/core.hpp"

#include <array>
#include <functional>
#include <vector>

namespace malab {

/// Uniform node lattice. Node (i, j) sits at origin + spacing * (i, j);
/// linear index is j * nx + i (row-major in y).
struct Grid {
  Vec2 origin = Vec2::Zero();
  Real spacing = 1.0;
  int nx = 0;
  int ny = 0;

  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  int col(int k) const { return k % nx; }
  int row(int k) const { return k / nx; }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  Vec2 point(int i, int j) const { return origin + spacing * Vec2(i, j); }
  Vec2 point(int k) const { return point(col(k), row(k)); }
  Real cell_area() const { return spacing * spacing; }

  /// Grid covering [lo, hi] with `cells` intervals along the longer side.
  static Grid covering(const Vec2& lo, const Vec2& hi, int cells);

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.origin == b.origin && a.spacing == b.spacing && a.nx == b.nx && a.ny == b.ny;
  }
};

/// Offsets of the eight lattice neighbours, the four axis ones first.
inline constexpr std::array<std::array<int, 2>, 8> kNeighbours = {{
    {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}};

/// Node mask; 1 = member.
using NodeMask = std::vector<std::uint8_t>;

int count(const NodeMask& mask);
bool is_subset(const NodeMask& a, const NodeMask& b);

/// Node samples on a grid. Values outside the region of interest are
/// unspecified (usually zero).
struct ScalarField {
  Grid grid;
  VecX values;

  ScalarField() = default;
  ScalarField(const Grid& g, Real fill = 0.0) : grid(g), values(VecX::Constant(g.size(), fill)) {}
  ScalarField(const Grid& g, VecX v) : grid(g), values(std::move(v)) {}

  Real operator[](int k) const { return values[k]; }
  Real& operator[](int k) { return values[k]; }
  Real at(int i, int j) const { return values[grid.index(i, j)]; }

  /// Bilinear interpolation; points outside the lattice are clamped.
  Real interpolate(const Vec2& x) const;

  static ScalarField sample(const Grid& g, const std::function<Real(const Vec2&)>& fn);
};

/// Grid norms. `mask` selects the nodes; each node carries the cell area.
Real lp_norm(const ScalarField& f, const NodeMask& mask, Real p);
Real sup_norm(const ScalarField& f, const NodeMask& mask);

/// Least-squares slope of y against x.
Real fit_slope(const std::vector<Real>& x, const std::vector<Real>& y);

/// Observed convergence order from errors on meshes with spacings `h`.
Real fit_order(const std::vector<Real>& h, const std::vector<Real>& err);

}  // namespace malab
