#include "malab/estimates.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace malab;

namespace {

constexpr Real pi = std::numbers::pi;

DomainPtr disk(Real r, int cells) { return std::make_shared<const ConvexDomain>(ConvexDomain::disk({0, 0}, r, cells)); }

/// Area of B_R(0) intersected with B_r(d e1).
Real lens_area(Real R, Real r, Real d) {
  if (d >= R + r) return 0;
  if (d <= std::abs(R - r)) return pi * std::min(R, r) * std::min(R, r);
  const Real a = r * r * std::acos((d * d + r * r - R * R) / (2 * d * r));
  const Real b = R * R * std::acos((d * d + R * R - r * r) / (2 * d * R));
  return a + b - 0.5 * std::sqrt((-d + r + R) * (d + r - R) * (d - r + R) * (d + r + R));
}

/// Composite Simpson rule on [a, b].
template <class F>
Real simpson(F f, Real a, Real b, int n = 20000) {
  const Real h = (b - a) / n;
  Real s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4 : 2);
  return s * h / 3;
}

}  // namespace

TEST_CASE("N functional on constants") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 64));
  NFunctionalSpec spec;
  const int z = iso.argmin();
  for (Real r : {0.05, 0.2}) {
    CHECK(n_functional(iso, ScalarField(iso.grid(), 1.0), spec, z, r) == doctest::Approx(std::pow(r, 0.35)));
    CHECK(n_functional(iso, ScalarField(iso.grid(), 0.0), spec, z, r) == 0);
  }
  NFunctionalSpec bad;
  bad.q = 1;
  CHECK_THROWS_AS(n_functional(iso, ScalarField(iso.grid(), 1.0), bad, z, 0.1), Error);
}

TEST_CASE("N functional of a radial singularity against radial quadrature") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1.5, 256));
  const Real h = iso.grid().spacing;
  const ScalarField f = ScalarField::sample(iso.grid(), singular_power({0, 0}, 0.5, h));
  NFunctionalSpec spec;
  spec.q = 1.5;
  spec.alpha = 0.3;
  for (Real r : {0.125, 0.5}) {
    const Real R = std::sqrt(2 * r);  // S(0, r) is the disk of radius sqrt(2r)
    const Real integral =
        simpson([&](Real rho) { return std::pow(std::min(std::pow(rho, -0.5), std::pow(h, -0.5)), 1.5) * rho; }, 0, R);
    const Real mean = 2 * integral / (R * R);
    const Real oracle = std::pow(r, 0.35) * std::pow(mean, 1 / 1.5);
    CHECK(n_functional(iso, f, spec, iso.argmin(), r) == doctest::Approx(oracle).epsilon(0.05));
  }
}

TEST_CASE("maximal function of constants and continuous data") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 32));
  const MaximalField m = maximal_function(iso, ScalarField(iso.grid(), -2.5));
  for (int k = 0; k < iso.grid().size(); ++k)
    if (iso.support[k]) CHECK(m.values[k] == doctest::Approx(2.5).epsilon(1e-14));

  const ScalarField f = ScalarField::sample(iso.grid(), [](const Vec2& x) { return 1 + std::sin(3 * x.x()) * x.y(); });
  const MaximalField mf = maximal_function(iso, f);
  for (int k = 0; k < iso.grid().size(); ++k)
    if (iso.support[k]) CHECK(mf.values[k] >= 0.9 * std::abs(f[k]));
}

TEST_CASE("maximal function of a small disk against the Euclidean maximal function") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(3, 192));
  const Real r0 = 0.15;
  const ScalarField f = ScalarField::sample(iso.grid(), [&](const Vec2& x) { return x.norm() < r0 ? 1.0 : 0.0; });
  const MaximalField m = maximal_function(iso, f);
  for (Real d : {0.3, 0.5, 0.8}) {
    // centered Euclidean oracle: sup over radii of |B(x,R) n B(0,r0)| / |B(x,R)|
    Real oracle = 0;
    for (Real R = 1e-3; R < 3 - d; R += 1e-3) oracle = std::max(oracle, lens_area(R, r0, d) / (pi * R * R));
    const Real grid = m.values[nearest_node(iso, {d, 0})];
    CAPTURE(d);
    CHECK(grid <= 2 * oracle);
    CHECK(grid >= oracle / 2);
    // the r^2/|x|^2 decay profile
    CHECK(grid >= 0.5 * r0 * r0 / (d * d) / 4);
  }
}

TEST_CASE("strong-type ratio of constants is exactly one") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 32));
  for (Real p : {1.5, 2.0, 4.0}) CHECK(strong_type_report(iso, {ScalarField(iso.grid(), 3.0)}, p).cEmp == doctest::Approx(1).epsilon(1e-12));
  CHECK_THROWS_AS(strong_type_report(iso, {ScalarField(iso.grid(), 1.0)}, 1.0), Error);
}

TEST_CASE("grid analysis helpers") {
  const Grid g = Grid::covering({-1, -1}, {1, 1}, 64);
  const NodeMask all(g.size(), 1);
  // affine u: W^{1,p} norm from the exact pieces
  const ScalarField u = ScalarField::sample(g, [](const Vec2& x) { return 3 * x.x() + 4 * x.y(); });
  const Real grad = 5 * std::pow(g.size() * g.cell_area(), 0.5);
  CHECK(w1p_norm(u, all, 2) == doctest::Approx(lp_norm(u, all, 2) + grad).epsilon(1e-12));

  const AffineFit fit = fit_affine(u, all, {0, 0});
  CHECK(fit.a == doctest::Approx(0).scale(1));
  CHECK(fit.b.isApprox(Vec2(3, 4)));
  CHECK(fit.maxError < 1e-12);
  CHECK(oscillation(u, all) == doctest::Approx(14));
  CHECK(oscillation(u, NodeMask(g.size(), 0)) == 0);

  CHECK(spread({2, 1.5, 1}) == 0.5);
  CHECK(spread({}) == 0);
  const NodeMask b = ball_mask(g, all, {0, 0}, 0.5);
  CHECK(mask_volume(g, b) == doctest::Approx(pi / 4).epsilon(0.05));
}

TEST_CASE("pinched family is certified in [1/2, 2]") {
  const DomainPtr d = disk(1, 32);
  CHECK(pinched_family().size() == 5);
  for (const auto& m : pinched_family())
    CHECK_NOTHROW(analytic_potential(m.analytic, d, std::pair<Real, Real>{kFamilyLambda, kFamilyUpper}));
}
