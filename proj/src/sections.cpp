#include "malab/sections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace malab {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

/// Fraction of a triangle where the linear interpolant of the corner values is negative.
Real triangle_fraction(Real a, Real b, Real c) {
  Real v[3] = {a, b, c};
  std::sort(v, v + 3);
  if (v[0] >= 0) return 0;
  if (v[2] < 0) return 1;
  if (v[1] < 0) {
    // two corners below; subtract the triangle above zero at the top corner
    const Real s = v[2] / (v[2] - v[0]);
    const Real t = v[2] / (v[2] - v[1]);
    return 1 - s * t;
  }
  const Real s = v[0] / (v[0] - v[1]);
  const Real t = v[0] / (v[0] - v[2]);
  return s * t;
}

}  // namespace

ScalarField section_level(const ConvexPotential& potential, int center) {
  const Grid& g = potential.grid();
  const Vec2 grad = potential.gradient(center);
  const Vec2 x0 = g.point(center);
  const Real f0 = potential.field[center];
  ScalarField level(g, kInf);
  for (int k = 0; k < g.size(); ++k)
    if (potential.support[k]) level[k] = potential.field[k] - f0 - grad.dot(g.point(k) - x0);
  return level;
}

Real section_volume(const ScalarField& level, Real height) {
  if (height <= 0) return 0;
  const Grid& g = level.grid;
  Real cells = 0;
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const Real v00 = level.at(i, j) - height, v10 = level.at(i + 1, j) - height;
      const Real v01 = level.at(i, j + 1) - height, v11 = level.at(i + 1, j + 1) - height;
      if (!std::isfinite(v00) || !std::isfinite(v10) || !std::isfinite(v01) || !std::isfinite(v11)) continue;
      if (v00 >= 0 && v10 >= 0 && v01 >= 0 && v11 >= 0) continue;
      if (v00 < 0 && v10 < 0 && v01 < 0 && v11 < 0) {
        cells += 1;
        continue;
      }
      cells += 0.5 * (triangle_fraction(v00, v10, v11) + triangle_fraction(v00, v11, v01));
    }
  return cells * g.cell_area();
}

Section make_section(std::shared_ptr<const ScalarField> level, int center, Real height) {
  Section s;
  const Grid& g = level->grid;
  s.centerNode = center;
  s.center = g.point(center);
  s.height = height;
  s.mask.assign(g.size(), 0);
  std::vector<Vec2> pts;
  for (int k = 0; k < g.size(); ++k)
    if ((*level)[k] < height) {
      s.mask[k] = 1;
      pts.push_back(g.point(k));
    }
  s.hull = convex_hull(std::move(pts));
  s.volume = section_volume(*level, height);
  s.level = std::move(level);
  return s;
}

int nearest_node(const ConvexPotential& potential, const Vec2& x) {
  if (!potential.domain->contains(x)) throw Error(ErrorCode::OutsideDomain, "center lies outside the closed domain");
  const Grid& g = potential.grid();
  const Vec2 s = (x - g.origin) / g.spacing;
  const int i0 = static_cast<int>(std::lround(s.x())), j0 = static_cast<int>(std::lround(s.y()));
  if (g.contains(i0, j0) && potential.support[g.index(i0, j0)]) return g.index(i0, j0);
  int best = -1;
  Real bestDist = kInf;
  for (int k = 0; k < g.size(); ++k) {
    if (!potential.support[k]) continue;
    const Real d = (g.point(k) - x).squaredNorm();
    if (d < bestDist) {
      bestDist = d;
      best = k;
    }
  }
  if (best < 0) throw Error(ErrorCode::OutsideDomain, "potential has no support nodes");
  return best;
}

Section section_at(const ConvexPotential& potential, int center, Real height) {
  if (center < 0 || center >= potential.grid().size() || !potential.support[center])
    throw Error(ErrorCode::OutsideDomain, "section center is not a support node");
  if (height < 0) throw Error(ErrorCode::InvalidArgument, "section height must be nonnegative");
  return make_section(std::make_shared<const ScalarField>(section_level(potential, center)), center, height);
}

Section section(const ConvexPotential& potential, const Vec2& x, Real height) {
  return section_at(potential, nearest_node(potential, x), height);
}

Real maximal_interior_height(const ConvexPotential& potential, int center) {
  const NodeMask inner = potential.inner();
  if (!inner[center]) throw Error(ErrorCode::OutsideDomain, "maximal height needs an inner center");
  const ScalarField level = section_level(potential, center);
  Real best = kInf;
  for (int k = 0; k < level.grid.size(); ++k)
    if (potential.support[k] && !inner[k]) best = std::min(best, level[k]);
  return best;
}

Real maximal_interior_height(const ConvexPotential& potential, const Vec2& x) {
  return maximal_interior_height(potential, nearest_node(potential, x));
}

std::vector<Real> height_ladder(Real lo, Real hi, Real ratio) {
  if (!(lo > 0) || !(ratio > 1)) throw Error(ErrorCode::InvalidArgument, "ladder needs lo > 0 and ratio > 1");
  std::vector<Real> out;
  for (Real t = lo; t <= hi * (1 + 1e-12); t *= ratio) out.push_back(t);
  return out;
}

Real engulfing_constant(const ConvexPotential& potential, const std::vector<EngulfingSample>& samples) {
  Real theta = 0;
  for (const auto& s : samples) {
    const ScalarField lx = section_level(potential, s.x);
    if (!(lx[s.y] < s.t)) continue;
    const ScalarField ly = section_level(potential, s.y);
    Real worst = 0;
    for (int k = 0; k < lx.grid.size(); ++k)
      if (lx[k] < s.t) worst = std::max(worst, ly[k]);
    theta = std::max(theta, worst / s.t);
  }
  return theta;
}

SeparationReport check_quadratic_separation(const ConvexPotential& potential, Real rho) {
  const Grid& g = potential.grid();
  std::vector<int> nodes;
  for (int k = 0; k < g.size(); ++k)
    if (potential.domain->is_boundary_node(k)) nodes.push_back(k);
  std::vector<Vec2> grads;
  for (int k : nodes)
    grads.push_back(potential.analytic ? potential.analytic->gradient(g.point(k)) : potential.gradient(k));
  SeparationReport r;
  r.minRatio = kInf;
  r.maxRatio = -kInf;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = 0; b < nodes.size(); ++b) {
      if (a == b) continue;
      const Vec2 d = g.point(nodes[a]) - g.point(nodes[b]);
      const Real gap = potential.field[nodes[a]] - potential.field[nodes[b]] - grads[b].dot(d);
      const Real ratio = gap / d.squaredNorm();
      r.minRatio = std::min(r.minRatio, ratio);
      r.maxRatio = std::max(r.maxRatio, ratio);
      ++r.pairs;
    }
  // rounding slack, so that ratios sitting exactly on rho still pass
  r.pass = r.pairs > 0 && r.minRatio >= rho * (1 - 1e-12) && r.maxRatio <= (1 + 1e-12) / rho;
  return r;
}

VolumeGrowth volume_growth_scan(const ConvexPotential& potential, const Vec2& x, const std::vector<Real>& heights) {
  const int c = nearest_node(potential, x);
  const ScalarField level = section_level(potential, c);
  const Real cap = potential.inner()[c] ? maximal_interior_height(potential, c) : kInf;
  VolumeGrowth out;
  std::vector<Real> lx, ly;
  for (Real t : heights) {
    if (t > cap) continue;
    const Real v = section_volume(level, t);
    if (v <= 0) continue;
    out.heights.push_back(t);
    out.volumes.push_back(v);
    lx.push_back(std::log(t));
    ly.push_back(std::log(v));
  }
  if (lx.size() < 4) throw Error(ErrorCode::InsufficientLadder, "volume growth needs four usable heights");
  out.exponent = fit_slope(lx, ly);
  return out;
}

}  // namespace malab
