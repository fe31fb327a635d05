#include "malab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace malab {

Real cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Real polygon_area(const std::vector<Vec2>& poly) {
  Real a = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) a += cross(poly[k], poly[(k + 1) % poly.size()]);
  return 0.5 * a;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  Vec2 c = Vec2::Zero();
  Real a = 0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& p = poly[k];
    const Vec2& q = poly[(k + 1) % poly.size()];
    const Real w = cross(p, q);
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

bool polygon_contains(const std::vector<Vec2>& ccw, const Vec2& p, Real tol) {
  for (std::size_t k = 0; k < ccw.size(); ++k) {
    const Vec2& a = ccw[k];
    const Vec2& b = ccw[(k + 1) % ccw.size()];
    const Vec2 e = b - a;
    if (cross(e, p - a) < -tol * e.norm()) return false;
  }
  return true;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const Vec2& p = pts[i];
    while (k >= t && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

std::vector<Vec2> regular_polygon(const Vec2& center, Real radius, int sides) {
  return ellipse_polygon(center, Vec2(radius, radius), sides);
}

std::vector<Vec2> ellipse_polygon(const Vec2& center, const Vec2& semi_axes, int sides) {
  std::vector<Vec2> v;
  v.reserve(sides);
  for (int k = 0; k < sides; ++k) {
    const Real t = 2 * EIGEN_PI * k / sides;
    v.emplace_back(center + Vec2(semi_axes.x() * std::cos(t), semi_axes.y() * std::sin(t)));
  }
  return v;
}

std::vector<Vec2> random_convex_polygon(std::mt19937_64& rng, const Vec2& center, Real radius, int points) {
  std::uniform_real_distribution<Real> angle(0, 2 * EIGEN_PI);
  std::uniform_real_distribution<Real> rad(0.5 * radius, radius);
  std::vector<Vec2> pts;
  for (int k = 0; k < points; ++k) {
    const Real t = angle(rng);
    const Real r = rad(rng);
    pts.emplace_back(center + r * Vec2(std::cos(t), std::sin(t)));
  }
  return convex_hull(pts);
}

// ---- ConvexDomain ----------------------------------------------------------

namespace {

void validate_polygon(const std::vector<Vec2>& v) {
  if (v.size() < 3) throw Error(ErrorCode::DegenerateDomain, "polygon needs three vertices");
  Real scale = 0;
  for (const auto& p : v) scale = std::max(scale, p.norm());
  scale = std::max(scale, 1.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec2 e1 = v[(k + 1) % v.size()] - v[k];
    const Vec2 e2 = v[(k + 2) % v.size()] - v[(k + 1) % v.size()];
    if (cross(e1, e2) < -1e-12 * scale * scale)
      throw Error(ErrorCode::InvalidArgument, "polygon is not convex and counterclockwise");
  }
}

}  // namespace

ConvexDomain ConvexDomain::make(std::vector<Vec2> vertices, int cells) {
  Vec2 lo = vertices.front(), hi = vertices.front();
  for (const auto& p : vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if ((hi - lo).minCoeff() <= 0) throw Error(ErrorCode::DegenerateDomain, "polygon has empty interior");
  return on_grid(std::move(vertices), Grid::covering(lo, hi, cells));
}

ConvexDomain ConvexDomain::on_grid(std::vector<Vec2> vertices, const Grid& grid) {
  validate_polygon(vertices);
  ConvexDomain d;
  d.vertices_ = std::move(vertices);
  d.grid_ = grid;
  d.area_ = polygon_area(d.vertices_);
  if (d.area_ <= 0) throw Error(ErrorCode::DegenerateDomain, "polygon has zero area");
  d.centroid_ = polygon_centroid(d.vertices_);
  d.inradius_ = std::numeric_limits<Real>::infinity();
  d.circumradius_ = 0;
  for (std::size_t k = 0; k < d.vertices_.size(); ++k) {
    const Vec2& a = d.vertices_[k];
    const Vec2& b = d.vertices_[(k + 1) % d.vertices_.size()];
    const Vec2 e = b - a;
    d.inradius_ = std::min(d.inradius_, cross(e, d.centroid_ - a) / e.norm());
    d.circumradius_ = std::max(d.circumradius_, (a - d.centroid_).norm());
    d.scale_ = std::max(d.scale_, a.norm());
  }
  if (!(d.inradius_ > 1e-9)) throw Error(ErrorCode::DegenerateDomain, "inradius below 1e-9");

  d.mask_.assign(grid.size(), 0);
  for (int k = 0; k < grid.size(); ++k) d.mask_[k] = d.contains(grid.point(k)) ? 1 : 0;
  d.interior_.assign(grid.size(), 0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const int k = grid.index(i, j);
      if (!d.mask_[k]) continue;
      bool inside = true;
      for (const auto& o : kNeighbours) {
        const int a = i + o[0], b = j + o[1];
        if (!grid.contains(a, b) || !d.mask_[grid.index(a, b)]) {
          inside = false;
          break;
        }
      }
      d.interior_[k] = inside ? 1 : 0;
    }
  return d;
}

ConvexDomain ConvexDomain::disk(const Vec2& center, Real radius, int cells, int sides) {
  const Vec2 r(radius, radius);
  return on_grid(regular_polygon(center, radius, sides), Grid::covering(center - r, center + r, cells));
}

ConvexDomain ConvexDomain::box(const Vec2& lo, const Vec2& hi, int cells) {
  return make({lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())}, cells);
}

ConvexDomain ConvexDomain::transformed(const Affine& map, int cells) const {
  std::vector<Vec2> v;
  v.reserve(vertices_.size());
  for (const auto& p : vertices_) v.push_back(map(p));
  if (map.det() < 0) std::reverse(v.begin(), v.end());
  return make(std::move(v), cells);
}

// ---- normalization ---------------------------------------------------------

Ellipse min_volume_ellipse(const std::vector<Vec2>& points, Real tol, int max_iterations, int* iterations) {
  const int n = static_cast<int>(points.size());
  constexpr int d = 2;
  Eigen::Matrix<Real, 3, Eigen::Dynamic> q(3, n);
  for (int k = 0; k < n; ++k) q.col(k) << points[k], 1.0;
  VecX u = VecX::Constant(n, 1.0 / n);
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Eigen::Matrix3d x = q * u.asDiagonal() * q.transpose();
    const Eigen::Matrix3d xinv = x.inverse();
    VecX m(n);
    for (int k = 0; k < n; ++k) m[k] = q.col(k).dot(xinv * q.col(k));
    int up = 0, down = -1;
    for (int k = 0; k < n; ++k) {
      if (m[k] > m[up]) up = k;
      if (u[k] > 0 && (down < 0 || m[k] < m[down])) down = k;
    }
    const Real gap_up = m[up] / (d + 1) - 1;
    const Real gap_down = 1 - m[down] / (d + 1);
    if (gap_up <= tol && gap_down <= tol) break;
    if (gap_up >= gap_down) {
      const Real step = (m[up] - d - 1) / ((d + 1) * (m[up] - 1));
      u *= (1 - step);
      u[up] += step;
    } else {
      Real step = (d + 1 - m[down]) / ((d + 1) * (m[down] - 1));
      step = std::min(step, u[down] / (1 - u[down]));
      u *= (1 + step);
      u[down] -= step;
      u[down] = std::max(u[down], 0.0);
    }
  }
  if (iterations) *iterations = it;
  if (it >= max_iterations) throw Error(ErrorCode::NoConvergence, "enclosing-ellipse ascent exceeded iteration cap");

  Vec2 c = Vec2::Zero();
  Mat2 s = Mat2::Zero();
  for (int k = 0; k < n; ++k) {
    c += u[k] * points[k];
    s += u[k] * points[k] * points[k].transpose();
  }
  s -= c * c.transpose();
  // Ellipse {x : (x-c)^T (d s)^{-1} (x-c) <= 1}; shape = (d s)^{1/2}.
  Eigen::SelfAdjointEigenSolver<Mat2> es(d * s);
  const Mat2 shape = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  // Round-off can leave points a hair outside; inflate to cover all of them.
  Ellipse e(c, shape);
  Real g = 1;
  for (const auto& p : points) g = std::max(g, e.gauge(p));
  return Ellipse(c, g * shape);
}

Real ray_exit_distance(const std::vector<Vec2>& ccw, const Vec2& origin, const Vec2& dir) {
  Real best = std::numeric_limits<Real>::infinity();
  for (std::size_t k = 0; k < ccw.size(); ++k) {
    const Vec2& a = ccw[k];
    const Vec2 e = ccw[(k + 1) % ccw.size()] - a;
    // origin + t dir = a + s e
    const Real den = cross(dir, e);
    if (std::abs(den) < 1e-300) continue;
    const Vec2 w = a - origin;
    const Real t = cross(w, e) / den;
    const Real s = cross(w, dir) / den;
    if (t >= 0 && s >= -1e-12 && s <= 1 + 1e-12) best = std::min(best, t);
  }
  return best;
}

NormalizationResult normalize_polygon(const std::vector<Vec2>& ccw, int directions) {
  NormalizationResult r;
  r.enclosing = min_volume_ellipse(ccw, 1e-7, 100000, &r.iterations);
  // Whitening map sends the enclosing ellipse to B_1; John's inclusion puts
  // B_{1/n} inside the image, so rescaling by the image's inradius lands in
  // B_1 subset T(domain) subset B_n.
  const Mat2 white = r.enclosing.shape.inverse();
  std::vector<Vec2> image;
  for (const auto& p : ccw) image.push_back(white * (p - r.enclosing.center));
  Real inner = std::numeric_limits<Real>::infinity();
  for (std::size_t k = 0; k < image.size(); ++k) {
    const Vec2& a = image[k];
    const Vec2 e = image[(k + 1) % image.size()] - a;
    inner = std::min(inner, cross(e, -a) / e.norm());
  }
  if (!(inner > 1e-9)) throw Error(ErrorCode::DegenerateDomain, "normalized image has no interior");
  const Real scale = 1.0 / inner;
  r.map = Affine(scale * white, -scale * white * r.enclosing.center);

  std::vector<Vec2> mapped;
  for (const auto& p : ccw) mapped.push_back(r.map(p));
  Real ray_min = std::numeric_limits<Real>::infinity(), ray_max = 0;
  for (int k = 0; k < directions; ++k) {
    const Real t = 2 * EIGEN_PI * k / directions;
    const Real rho = ray_exit_distance(mapped, Vec2::Zero(), Vec2(std::cos(t), std::sin(t)));
    ray_min = std::min(ray_min, rho);
    ray_max = std::max(ray_max, rho);
  }
  Real vertex_max = 0;
  for (const auto& p : mapped) vertex_max = std::max(vertex_max, p.norm());
  r.innerRadiusCheck = std::min(ray_min, scale * inner);
  r.outerRadiusCheck = std::max(ray_max, vertex_max);
  r.directions = directions;
  return r;
}

NormalizationResult normalize_domain(const ConvexDomain& domain, int directions) {
  if (domain.inradius() < 1e-9) throw Error(ErrorCode::DegenerateDomain, "inradius below 1e-9");
  return normalize_polygon(domain.vertices(), directions);
}

}  // namespace malab
