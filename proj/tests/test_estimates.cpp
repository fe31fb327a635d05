#include "malab/estimates.hpp"
#include "malab/exponents.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace malab;

namespace {

constexpr Real pi = std::numbers::pi;

DomainPtr disk(Real r, int cells) { return std::make_shared<const ConvexDomain>(ConvexDomain::disk({0, 0}, r, cells)); }

DomainPtr half_disk(int cells) {
  std::vector<Vec2> v;
  for (int k = 0; k <= 180; ++k) v.push_back({std::cos(pi * k / 180), std::sin(pi * k / 180)});
  return std::make_shared<const ConvexDomain>(ConvexDomain::make(v, cells));
}

int origin_node(const ConvexPotential& p) {
  const Grid& g = p.grid();
  const int i = static_cast<int>(std::lround(-g.origin.x() / g.spacing));
  const int j = static_cast<int>(std::lround(-g.origin.y() / g.spacing));
  return g.index(i, j);
}

ScalarField solve_full(const ConvexPotential& p, const ScalarField& f, const ScalarField& bd) {
  const LinearizedOperator op = assemble(cofactor(p), *p.domain);
  return solve_dirichlet({&op, f, bd});
}

const Sampler zero = [](const Vec2&) { return 0.0; };

}  // namespace

TEST_CASE("empirical ratio conventions") {
  CHECK(empirical_ratio(1, 4) == 0.25);
  CHECK(empirical_ratio(-1, 4) == 0);
  CHECK(empirical_ratio(0, 0) == 0);
  CHECK(std::isinf(empirical_ratio(1, 0)));
}

TEST_CASE("spread judgement groups by potential and mesh") {
  EstimateReport r;
  for (auto [pot, c] : {std::pair<const char*, Real>{"a", 1.0}, {"a", 0.1}, {"b", 0.8}}) {
    TrialRow t;
    t.potential = pot;
    t.mesh = 32;
    t.cEmp = c;
    r.add(t);
  }
  r.judge_spread();
  CHECK(r.cEmp == 1.0);
  CHECK(r.spread == doctest::Approx(0.2));
  CHECK(r.pass);
}

TEST_CASE("maximum principle on the exact Poisson problem") {
  for (int cells : {64, 128}) {
    const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, cells));
    const Real h = iso.grid().spacing;
    MaxPrincipleCase c;
    c.potential = "isotropic";
    c.mesh = cells;
    c.phi = &iso;
    c.region = iso.domain->mask();
    c.f = [](const Vec2&) { return -1.0; };
    c.boundary = [](const Vec2& x) { return (1 - x.squaredNorm()) / 4; };
    const MaxPrincipleOutcome o = max_principle_trial(MaxPrincipleKind::Global, c, 2);
    CHECK(o.supU == doctest::Approx(0.25).epsilon(h * h));
    // Poisson arithmetic: sup u / (|B_1|^{1/2} ||1||_{L^2(B_1)}) = 1/(4 pi)
    CHECK(o.cEmp == doctest::Approx(1 / (4 * pi)).epsilon(0.03));
    CHECK(o.cEmp >= 0);
  }
}

TEST_CASE("maximum principle with zero data and with given fields") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 32));
  MaxPrincipleCase c;
  c.phi = &iso;
  c.region = iso.domain->mask();
  c.f = zero;
  c.boundary = zero;
  const MaxPrincipleOutcome o = max_principle_trial(MaxPrincipleKind::Global, c, 2);
  CHECK(o.lhs == 0);
  CHECK(o.cEmp == 0);

  // A superharmonic field is not a subsolution of Laplace u = 0
  const ScalarField bump = ScalarField::sample(iso.grid(), [](const Vec2& x) { return 1 - x.squaredNorm(); });
  c.given = &bump;
  CHECK_THROWS_AS(max_principle_trial(MaxPrincipleKind::Global, c, 2), Error);
  const ScalarField bowl = ScalarField::sample(iso.grid(), [](const Vec2& x) { return x.squaredNorm() - 1; });
  c.given = &bowl;
  CHECK_NOTHROW(max_principle_trial(MaxPrincipleKind::Global, c, 2));

  CHECK(max_principle_exponent(MaxPrincipleKind::Global, 2) == 0.5);
  CHECK(max_principle_exponent(MaxPrincipleKind::Ball, 2) == 0.375);
}

TEST_CASE("Harnack on constants and on an affine solution") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 128));
  HarnackCase c;
  c.phi = &iso;
  c.center = iso.argmin();
  c.t = 0.32;
  c.f = zero;
  c.boundary = [](const Vec2&) { return 1.0; };
  CHECK(harnack_trial(c, 2).cEmp == doctest::Approx(1).epsilon(1e-10));

  c.boundary = [](const Vec2& x) { return x.x() + 1.5; };
  const HarnackOutcome o = harnack_trial(c, 2);
  // sup and inf over S(0, t/2), the disk of radius sqrt(t), by direct arithmetic
  Real sup = -1e9, inf = 1e9;
  for (int k = 0; k < iso.grid().size(); ++k) {
    const Vec2 x = iso.grid().point(k);
    if (iso.support[k] && 0.5 * x.squaredNorm() < 0.16) {
      sup = std::max(sup, x.x() + 1.5);
      inf = std::min(inf, x.x() + 1.5);
    }
  }
  CHECK(o.supHalf == doctest::Approx(sup).epsilon(1e-10));
  CHECK(o.infHalf == doctest::Approx(inf).epsilon(1e-10));
  CHECK(o.cEmp == doctest::Approx(sup / inf).epsilon(1e-10));
  CHECK(sup == doctest::Approx(1.5 + std::sqrt(0.32)).epsilon(0.01));

  c.boundary = [](const Vec2& x) { return x.x(); };
  CHECK_THROWS_AS(harnack_trial(c, 2), Error);
}

TEST_CASE("oscillation decay of affine and constant fields") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 128));
  const ScalarField f(iso.grid(), 0.0);
  const std::vector<Real> rhos = height_ladder(4 * ladder_floor(iso.grid()), 0.25);
  const ScalarField affine = ScalarField::sample(iso.grid(), [](const Vec2& x) { return 2 * x.x() - x.y(); });
  const EstimateReport a = oscillation_decay(iso, affine, f, iso.argmin(), 0.25, rhos, 2);
  CHECK(*a.find("alpha_emp") >= 0.49);
  CHECK(*a.find("degenerate") == 0);
  const EstimateReport c = oscillation_decay(iso, ScalarField(iso.grid(), 3.0), f, iso.argmin(), 0.25, rhos, 2);
  CHECK(*c.find("degenerate") == 1);
  CHECK_THROWS_AS(oscillation_decay(iso, affine, f, iso.argmin(), 0.25, {0.1}, 2), Error);
}

TEST_CASE("interior C1,alpha fit") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 128));
  const ScalarField affine = ScalarField::sample(iso.grid(), [](const Vec2& x) { return 0.5 + 2 * x.x() - x.y(); });
  InteriorC1AlphaSpec spec;
  const EstimateReport a = pointwise_c1alpha_interior(iso, affine, ScalarField(iso.grid(), 0.0), spec);
  CHECK(*a.find("fit_error") < 1e-12);
  CHECK(*a.find("a") == doctest::Approx(0.5));
  CHECK(*a.find("b1") == doctest::Approx(2));
  CHECK(*a.find("b2") == doctest::Approx(-1));

  // Poisson: the fit error is the Taylor remainder |x|^2/4 on the fit ball
  const ScalarField ones(iso.grid(), 1.0);
  const ScalarField u = solve_full(iso, ones, ScalarField::sample(iso.grid(), [](const Vec2& x) { return (x.squaredNorm() - 1) / 4; }));
  const EstimateReport p = pointwise_c1alpha_interior(iso, u, ones, spec);
  CHECK(*p.find("fit_error") <= spec.muStar * spec.muStar / 4 + 1e-6);
  CHECK(std::isfinite(p.cEmp));

  // A minimizer on the boundary is rejected
  const auto tilted = analytic_potential(AnalyticPotential::isotropic().composed(Affine(Mat2::Identity(), {-3, 0})),
                                         disk(1, 32));
  CHECK_THROWS_AS(pointwise_c1alpha_interior(tilted, ScalarField(tilted.grid(), 0.0), ScalarField(tilted.grid(), 0.0), spec),
                  Error);
}

TEST_CASE("affine cascade: affine data stay exact, Poisson data decay") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 128));
  const ScalarField affine = ScalarField::sample(iso.grid(), [](const Vec2& x) { return 1 + x.x() - 2 * x.y(); });
  const AffineCascade a = affine_cascade(iso, affine, 0.25, 0.3, 6);
  REQUIRE(a.levels.size() >= 2);
  // level 1 is measured against l_0 = 0; from then on the fit is exact
  for (const auto& l : a.levels) {
    if (l.k == 1) continue;
    CHECK(l.error < 1e-9);
    CHECK(l.b.isApprox(Vec2(1, -2), 1e-8));
  }

  const ScalarField u = ScalarField::sample(iso.grid(), [](const Vec2& x) { return (x.squaredNorm() - 1) / 4; });
  const AffineCascade p = affine_cascade(iso, u, 0.25, 0.3, 8);
  REQUIRE(p.levels.size() >= 3);
  CHECK(p.rate >= 0.65);
  CHECK(p.driftConverges);
}

TEST_CASE("comparison with identical potentials is exact") {
  const DomainPtr d = disk(1, 64);
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
  ComparisonInput in;
  in.phi = &iso;
  in.w = &iso;
  in.f = ScalarField(d->grid(), 0.0);
  in.u = ScalarField::sample(d->grid(), [](const Vec2& x) { return x.x() * x.x() - x.y() * x.y(); });
  const ComparisonOutcome o = comparison_estimate(in);
  CHECK(o.cofactorDistance == 0);
  CHECK(o.cofactorHalfBall == 0);
  CHECK(o.solutionGap < 1e-10);
  CHECK(o.lhs < 1e-10);
  CHECK(cofactor_distance(cofactor(iso), cofactor(iso), d->mask(), 2) == 0);
}

TEST_CASE("boundary fits on the half disk") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), half_disk(128));
  const int o = origin_node(iso);
  REQUIRE(iso.grid().point(o).norm() < 1e-12);
  const ScalarField xn = ScalarField::sample(iso.grid(), [](const Vec2& x) { return x.y(); });
  const ScalarField f(iso.grid(), 0.0);
  const BoundaryData bc{"zero", zero, [](const Vec2&) { return Vec2(0, 0); }};
  const EstimateReport r = pointwise_c1alpha_boundary(iso, xn, f, bc, o, {});
  CHECK(*r.find("b1") == doctest::Approx(0).scale(1));
  CHECK(*r.find("b2") == doctest::Approx(1));

  const EstimateReport g = boundary_holder_gradient(iso, xn, f, o, height_ladder(4 * ladder_floor(iso.grid()), 0.25));
  CHECK(*g.find("dnu") == doctest::Approx(1));
  CHECK(*g.find("degenerate") == 1);
  for (const auto& t : g.trials) CHECK(t.lhs == doctest::Approx(1));
}

TEST_CASE("barrier on quadratics") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), half_disk(64));
  for (Real delta : {0.3, 0.2, 0.1}) {
    const BarrierReport b = build_barrier(iso, delta);
    CHECK(b.symbolicError <= 1e-10);
    CHECK(b.margin <= 0);
    CHECK(b.pass);
    CHECK(b.barrier.M == doctest::Approx(2 / std::pow(delta, 3)));
  }
  std::vector<Real> ld, lm;
  for (Real d : {0.3, 0.2, 0.1}) {
    ld.push_back(std::log(d));
    lm.push_back(std::log(barrier_slope(d, 0.5, 2)));
  }
  CHECK(fit_slope(ld, lm) == doctest::Approx(-3).epsilon(1e-12));
  const ConvexPotential round = analytic_potential(AnalyticPotential::isotropic(), disk(1, 32));
  CHECK_THROWS_AS(build_barrier(round, 0.2), Error);
}

TEST_CASE("global estimates on trivial data") {
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), disk(1, 64));
  // f = 0 with affine boundary data: u is affine and every ratio finite
  const BoundaryData affine{"affine", [](const Vec2& x) { return 1 + x.x(); }, [](const Vec2&) { return Vec2(1, 0); }};
  W1pSpec spec;
  const EstimateReport w = global_w1p_report(iso, {{"zero", zero}}, spec, affine);
  REQUIRE(w.trials.size() == spec.ps.size());
  for (const auto& t : w.trials) {
    CHECK(std::isfinite(t.cEmp));
    const ScalarField u = ScalarField::sample(iso.grid(), affine.value);
    CHECK(t.lhs == doctest::Approx(w1p_norm(u, iso.domain->mask(), t.p)).epsilon(1e-8));
  }
  spec.ps = {6};
  CHECK_THROWS_AS(global_w1p_report(iso, {{"zero", zero}}, spec, affine), Error);

  std::mt19937_64 rng(1);
  const EstimateReport h = global_holder_report(iso, ScalarField(iso.grid(), 2.0), ScalarField(iso.grid(), 0.0),
                                                {"c", [](const Vec2&) { return 2.0; }, [](const Vec2&) { return Vec2(0, 0); }},
                                                2, 0.3, rng, 500);
  CHECK(h.cEmp == 0);
}

TEST_CASE("identity report on quadratics is exact") {
  const EstimateReport r = identity_report(AnalyticPotential::quadratic(Vec2(2, 0.5).asDiagonal()), {32, 64});
  CHECK(*r.find("max_identity") <= 1e-10);
  CHECK(*r.find("max_divergence") <= 1e-12);
  CHECK(r.pass);
  const EstimateReport p = identity_report(AnalyticPotential::perturbed(0.05), {32, 64, 128});
  CHECK(*p.find("order_identity") >= 1.8);
  CHECK(p.pass);
}

TEST_CASE("sections are invariant under a unimodular map") {
  Mat2 A;
  A << 2, 0.5, 0, 0.5;
  const ConvexDomain d = ConvexDomain::disk({0, 0}, 1, 256);
  NFunctionalSpec ns;
  const EstimateReport r = affine_invariance_report(AnalyticPotential::isotropic(), d, A, 256,
                                                    {{{0, 0}, 0.1, {0.1, 0.1}}, {{0.2, -0.1}, 0.05, {0.25, -0.05}}},
                                                    [](const Vec2& x) { return 1 + x.x() * x.x(); }, ns);
  CHECK(*r.find("volume_dev") <= 0.02);
  CHECK(*r.find("n_dev") <= 0.05);
  CHECK(*r.find("theta_dev") <= 0.05);
}
