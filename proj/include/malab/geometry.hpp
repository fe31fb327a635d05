#pragma once

#include "malab/core.hpp"
#include "malab/grid.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

namespace malab {

/// x -> matrix * x + shift.
template <typename Scalar>
struct AffineMap {
  Matrix2<Scalar> matrix = Matrix2<Scalar>::Identity();
  Vector2<Scalar> shift = Vector2<Scalar>::Zero();

  AffineMap() = default;
  AffineMap(const Matrix2<Scalar>& m, const Vector2<Scalar>& b) : matrix(m), shift(b) {
    if (m.determinant() == Scalar(0)) throw Error(ErrorCode::InvalidArgument, "singular affine map");
  }

  Scalar det() const { return matrix.determinant(); }
  bool unimodular(Scalar tol = Scalar(1e-12)) const { return std::abs(std::abs(det()) - 1) <= tol; }

  Vector2<Scalar> operator()(const Vector2<Scalar>& x) const { return matrix * x + shift; }

  AffineMap inverse() const {
    const Matrix2<Scalar> inv = matrix.inverse();
    return AffineMap(inv, -inv * shift);
  }

  /// (*this)(other(x)).
  AffineMap after(const AffineMap& other) const {
    return AffineMap(matrix * other.matrix, matrix * other.shift + shift);
  }

  static AffineMap identity() { return AffineMap(); }
  static AffineMap linear(const Matrix2<Scalar>& m) { return AffineMap(m, Vector2<Scalar>::Zero()); }
};

/// center + shape * B_1.
template <typename Scalar>
struct Ellipsoid {
  Vector2<Scalar> center = Vector2<Scalar>::Zero();
  Matrix2<Scalar> shape = Matrix2<Scalar>::Identity();

  Ellipsoid() = default;
  Ellipsoid(const Vector2<Scalar>& c, const Matrix2<Scalar>& s) : center(c), shape(s) {
    Eigen::SelfAdjointEigenSolver<Matrix2<Scalar>> es(s);
    if (es.eigenvalues().minCoeff() <= Scalar(0))
      throw Error(ErrorCode::InvalidArgument, "ellipsoid shape must be positive definite");
  }

  /// |shape^{-1}(x - center)|; <= 1 inside.
  Scalar gauge(const Vector2<Scalar>& x) const { return shape.ldlt().solve(x - center).norm(); }
  bool contains(const Vector2<Scalar>& x, Scalar scale = Scalar(1)) const { return gauge(x) <= scale; }
  Scalar volume() const { return Scalar(EIGEN_PI) * std::abs(shape.determinant()); }
};

using Affine = AffineMap<Real>;
using Ellipse = Ellipsoid<Real>;

// ---- polygon utilities ---------------------------------------------------

Real cross(const Vec2& a, const Vec2& b);
Real polygon_area(const std::vector<Vec2>& poly);
Vec2 polygon_centroid(const std::vector<Vec2>& poly);
bool polygon_contains(const std::vector<Vec2>& ccw, const Vec2& p, Real tol = 1e-12);
/// Andrew's monotone chain; counterclockwise, collinear points dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);
std::vector<Vec2> regular_polygon(const Vec2& center, Real radius, int sides);
std::vector<Vec2> ellipse_polygon(const Vec2& center, const Vec2& semi_axes, int sides);
std::vector<Vec2> random_convex_polygon(std::mt19937_64& rng, const Vec2& center, Real radius, int points);

/// Convex polygon with its node lattice. Immutable once built.
class ConvexDomain {
 public:
  /// Throws InvalidArgument for non-convex or clockwise input and
  /// DegenerateDomain when the interior is empty.
  static ConvexDomain make(std::vector<Vec2> vertices, int cells);
  /// Same polygon on an explicitly given lattice.
  static ConvexDomain on_grid(std::vector<Vec2> vertices, const Grid& grid);
  static ConvexDomain disk(const Vec2& center, Real radius, int cells, int sides = 360);
  static ConvexDomain box(const Vec2& lo, const Vec2& hi, int cells);

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const Grid& grid() const { return grid_; }
  /// Nodes in the closed polygon.
  const NodeMask& mask() const { return mask_; }
  /// Nodes of the mask whose eight neighbours are all in the mask.
  const NodeMask& interior() const { return interior_; }
  bool is_boundary_node(int k) const { return mask_[k] && !interior_[k]; }

  bool contains(const Vec2& p) const { return polygon_contains(vertices_, p, 1e-12 * scale_); }
  Real area() const { return area_; }
  /// Radii of the largest centred ball inside / smallest centred ball around
  /// the polygon, both about the area centroid.
  Real inradius() const { return inradius_; }
  Real circumradius() const { return circumradius_; }
  Vec2 centroid() const { return centroid_; }

  ConvexDomain transformed(const Affine& map, int cells) const;

 private:
  std::vector<Vec2> vertices_;
  Grid grid_;
  NodeMask mask_;
  NodeMask interior_;
  Real area_ = 0;
  Real inradius_ = 0;
  Real circumradius_ = 0;
  Real scale_ = 1;
  Vec2 centroid_ = Vec2::Zero();
};

using DomainPtr = std::shared_ptr<const ConvexDomain>;

// ---- affine normalization ------------------------------------------------

struct NormalizationResult {
  Affine map;
  Ellipse enclosing;  ///< minimum-volume ellipse around the vertices
  Real innerRadiusCheck = 0;
  Real outerRadiusCheck = 0;
  int iterations = 0;
  int directions = 0;
};

/// Minimum-volume enclosing ellipse of a point set (Khachiyan ascent with
/// away steps). Throws NoConvergence past `max_iterations`.
Ellipse min_volume_ellipse(const std::vector<Vec2>& points, Real tol = 1e-7,
                           int max_iterations = 100000, int* iterations = nullptr);

/// Affine T with B_1 subset T(domain) subset B_n, certified on `directions`
/// rays plus the exact edge distances.
NormalizationResult normalize_domain(const ConvexDomain& domain, int directions = 720);
NormalizationResult normalize_polygon(const std::vector<Vec2>& ccw, int directions = 720);

/// Distance from `origin` to the boundary of a polygon containing it, along `dir`.
Real ray_exit_distance(const std::vector<Vec2>& ccw, const Vec2& origin, const Vec2& dir);

}  // namespace malab
