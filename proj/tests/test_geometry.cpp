#include "malab/functionals.hpp"
#include "malab/sections.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace malab;

namespace {

constexpr Real pi = std::numbers::pi;

DomainPtr disk(Real r, int cells) { return std::make_shared<const ConvexDomain>(ConvexDomain::disk({0, 0}, r, cells)); }

Real singular_values_ratio(const Mat2& m) {
  Eigen::JacobiSVD<Mat2> svd(m);
  return svd.singularValues()(0) / svd.singularValues()(1);
}

}  // namespace

TEST_CASE("disk is already normalized") {
  const NormalizationResult n = normalize_domain(ConvexDomain::disk({0, 0}, 1, 32));
  CHECK(n.map.matrix.isApprox(Mat2::Identity(), 1e-3));
  CHECK(n.map.shift.norm() < 1e-3);
  CHECK(n.innerRadiusCheck == doctest::Approx(1).epsilon(1e-3));
  CHECK(n.outerRadiusCheck <= kDim);
}

TEST_CASE("ellipse (4, 1/4) normalizes by diag(1/4, 4) up to rotation") {
  const NormalizationResult n = normalize_polygon(ellipse_polygon({0, 0}, {4, 0.25}, 360));
  Eigen::JacobiSVD<Mat2> svd(n.map.matrix);
  CHECK(svd.singularValues()(0) == doctest::Approx(4).epsilon(1e-3));
  CHECK(svd.singularValues()(1) == doctest::Approx(0.25).epsilon(1e-3));
  CHECK(singular_values_ratio(n.map.matrix) == doctest::Approx(16).epsilon(2e-3));
}

TEST_CASE("square normalization certified by brute-force containment") {
  const std::vector<Vec2> square = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const NormalizationResult n = normalize_polygon(square);
  const Affine inv = n.map.inverse();
  // T(square) inside B_2: sample the boundary densely
  Real outer = 0;
  for (int k = 0; k < 10000; ++k) {
    const int side = k % 4;
    const Real s = -1 + 2.0 * (k / 4) / 2499;
    const Vec2 p = side == 0 ? Vec2(s, -1) : side == 1 ? Vec2(1, s) : side == 2 ? Vec2(-s, 1) : Vec2(-1, -s);
    outer = std::max(outer, n.map(p).norm());
  }
  CHECK(outer <= kDim + 1e-9);
  // B_1 inside T(square): preimages of the unit circle lie in the square
  for (int k = 0; k < 10000; ++k) {
    const Real a = 2 * pi * k / 10000;
    const Vec2 x = inv(Vec2(std::cos(a), std::sin(a)));
    CHECK(std::max(std::abs(x.x()), std::abs(x.y())) <= 1 + 1e-9);
  }
}

TEST_CASE("mask areas against exact values") {
  const ConvexDomain d = ConvexDomain::disk({0, 0}, 1, 256);
  CHECK(mask_volume(d.grid(), d.mask()) == doctest::Approx(pi).epsilon(0.02));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Vec2> poly = random_convex_polygon(rng, {0.2, -0.1}, 1.3, 12);
    const ConvexDomain p = ConvexDomain::make(poly, 256);
    CHECK(mask_volume(p.grid(), p.mask()) == doctest::Approx(polygon_area(convex_hull(poly))).epsilon(0.02));
  }
}

TEST_CASE("sections of quadratics are the closed-form disks and ellipses") {
  const DomainPtr d = disk(2, 256);
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
  const Section s = section(iso, {0, 0}, 0.5);
  CHECK(section_volume(s) == doctest::Approx(pi).epsilon(0.02));
  CHECK(s.volume == doctest::Approx(pi).epsilon(0.02));
  CHECK(section(iso, {0, 0}, 0.0).nodes() == 0);

  const ConvexPotential aniso = analytic_potential(AnalyticPotential::quadratic(Vec2(4, 0.25).asDiagonal()), d);
  const Section e = section(aniso, {0, 0}, 0.5);
  CHECK(e.volume == doctest::Approx(pi).epsilon(0.02));
  // Semi-axes (1/2, 2) from the hull extent
  Real xmax = 0, ymax = 0;
  for (const Vec2& v : e.hull) {
    xmax = std::max(xmax, std::abs(v.x()));
    ymax = std::max(ymax, std::abs(v.y()));
  }
  CHECK(xmax == doctest::Approx(0.5).epsilon(0.05));
  CHECK(ymax == doctest::Approx(2).epsilon(0.05));
}

TEST_CASE("maximal interior height against a dense scan") {
  const DomainPtr d = disk(1, 128);
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
  CHECK(maximal_interior_height(iso, Vec2(0, 0)) == doctest::Approx(0.5).epsilon(0.03));

  // Independent oracle: scan t upwards until the section swallows a non-inner node
  const NodeMask inner = iso.inner();
  for (const Vec2& x : {Vec2(0.3, 0.2), Vec2(-0.6, 0.1)}) {
    const int c = nearest_node(iso, x);
    const Vec2 xc = iso.grid().point(c);
    Real scanned = 0;
    for (Real t = 1e-4;; t += 1e-4) {
      bool hit = false;
      for (int k = 0; k < iso.grid().size() && !hit; ++k)
        if (iso.support[k] && !inner[k]) hit = 0.5 * (iso.grid().point(k) - xc).squaredNorm() < t;
      if (hit) break;
      scanned = t;
    }
    CHECK(maximal_interior_height(iso, c) == doctest::Approx(scanned).epsilon(2e-3 / std::max(scanned, 1e-3)));
  }
  // the innermost node next to the boundary on the positive axis
  int edge = iso.argmin();
  for (int k = 0; k < iso.grid().size(); ++k)
    if (inner[k] && std::abs(iso.grid().point(k).y()) < 1e-12 && iso.grid().point(k).x() > iso.grid().point(edge).x())
      edge = k;
  CHECK(maximal_interior_height(iso, edge) <= ladder_floor(iso.grid()));
}

TEST_CASE("engulfing constants of round sections") {
  const DomainPtr d = disk(1.5, 128);
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
  const Grid& g = iso.grid();
  auto node = [&](Vec2 x) { return nearest_node(iso, x); };
  std::vector<EngulfingSample> samples;
  for (Real t : {0.02, 0.05, 0.1})
    for (const Vec2& off : {Vec2(0.05, 0), Vec2(0.1, 0.1), Vec2(-0.15, 0.05)})
      samples.push_back({node({0, 0}), t, node(off)});
  const Real theta = engulfing_constant(iso, samples);
  CHECK(theta >= 1);
  CHECK(theta <= 4 + 4 * g.spacing);
  CHECK(engulfing_constant(iso, {{node({0, 0}), 0.1, node({0, 0})}}) == doctest::Approx(1).epsilon(0.05));
}

TEST_CASE("quadratic separation ratios") {
  const DomainPtr d = disk(1, 64);
  const SeparationReport iso = check_quadratic_separation(analytic_potential(AnalyticPotential::isotropic(), d), 0.5);
  CHECK(iso.minRatio == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(iso.maxRatio == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(iso.pass);
  const Real rho = 0.3;
  const Mat2 M = Vec2(2 * rho, 1 / (2 * rho)).asDiagonal();
  CHECK(check_quadratic_separation(analytic_potential(AnalyticPotential::quadratic(M), d), rho).pass);
}

TEST_CASE("section volumes grow linearly in the height") {
  const DomainPtr d = disk(1, 256);
  const std::vector<Real> ladder = height_ladder(0.005, 0.16);
  const VolumeGrowth iso = volume_growth_scan(analytic_potential(AnalyticPotential::isotropic(), d), {0, 0}, ladder);
  CHECK(iso.exponent == doctest::Approx(1).epsilon(0.05));
  const VolumeGrowth q = volume_growth_scan(
      analytic_potential(AnalyticPotential::quadratic(Vec2(2, 0.5).asDiagonal()), d), {0, 0}, ladder);
  CHECK(q.exponent == doctest::Approx(1).epsilon(0.05));
  for (std::size_t k = 0; k < iso.volumes.size(); ++k)
    CHECK(q.volumes[k] == doctest::Approx(iso.volumes[k]).epsilon(0.03));
}
