#include "malab/estimates.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace malab;

namespace {

constexpr Real pi = std::numbers::pi;

DomainPtr disk(int cells) { return std::make_shared<const ConvexDomain>(ConvexDomain::disk({0, 0}, 1, cells)); }
DomainPtr square(int cells) { return std::make_shared<const ConvexDomain>(ConvexDomain::box({-1, -1}, {1, 1}, cells)); }

/// Entry of the interior matrix between two nodes (0 when absent).
Real entry(const LinearizedOperator& op, int a, int b) {
  return op.interior.coeff(op.unknown[a], op.unknown[b]);
}

/// A node all of whose neighbours are unknowns.
int deep_node(const LinearizedOperator& op) {
  const Grid& g = op.grid;
  for (int k : op.nodes) {
    bool ok = true;
    for (const auto& o : kNeighbours) ok = ok && op.unknown[g.index(g.col(k) + o[0], g.row(k) + o[1])] >= 0;
    if (ok) return k;
  }
  return -1;
}

void check_five_point(const LinearizedOperator& op, Real wx, Real wy) {
  const Grid& g = op.grid;
  const Real h2 = g.cell_area();
  const int k = deep_node(op);
  REQUIRE(k >= 0);
  const int i = g.col(k), j = g.row(k);
  CHECK(entry(op, k, k) == doctest::Approx(2 * (wx + wy) / h2));
  CHECK(entry(op, k, g.index(i + 1, j)) == doctest::Approx(-wx / h2));
  CHECK(entry(op, k, g.index(i - 1, j)) == doctest::Approx(-wx / h2));
  CHECK(entry(op, k, g.index(i, j + 1)) == doctest::Approx(-wy / h2));
  CHECK(entry(op, k, g.index(i, j - 1)) == doctest::Approx(-wy / h2));
  CHECK(entry(op, k, g.index(i + 1, j + 1)) == 0);
  CHECK(entry(op, k, g.index(i - 1, j + 1)) == 0);
}

}  // namespace

TEST_CASE("constant cofactors give the five-point stencils") {
  const DomainPtr d = disk(32);
  check_five_point(assemble(cofactor(analytic_potential(AnalyticPotential::isotropic(), d)), *d), 1, 1);
  // phi = diag(4, 1/4) / 2 has cofactor diag(1/4, 4)
  const auto q = analytic_potential(AnalyticPotential::quadratic(Vec2(4, 0.25).asDiagonal()), d);
  const LinearizedOperator op = assemble(cofactor(q), *d);
  check_five_point(op, 0.25, 4);
  CHECK(op.mMatrix);
}

TEST_CASE("varying cofactor: symmetric matrix, second-order action") {
  const AnalyticPotential pert = AnalyticPotential::perturbed(0.05);
  const Sampler u = [](const Vec2& x) { return std::sin(2 * x.x()) * std::cos(x.y()) + x.x() * x.y() * x.y(); };
  auto exact = [&](const Vec2& x) {
    // -Phi^{ij} u_ij with Phi = cof D^2 phi
    const Real s = std::sin(2 * x.x()), c = std::cos(2 * x.x()), cy = std::cos(x.y()), sy = std::sin(x.y());
    Mat2 H;
    H << -4 * s * cy, -2 * c * sy + 2 * x.y(), -2 * c * sy + 2 * x.y(), -s * cy + 2 * x.x();
    return -cofactor_matrix(pert.hessian(x)).cwiseProduct(H).sum();
  };
  std::vector<Real> hs, errs;
  for (int cells : {32, 64, 128}) {
    const DomainPtr d = disk(cells);
    const LinearizedOperator op = assemble(cofactor(analytic_potential(pert, d)), *d);
    const SparseMatrix t = op.interior.transpose();
    CHECK((op.interior - t).norm() <= 1e-12 * op.interior.norm());
    const ScalarField au = op.apply(ScalarField::sample(op.grid, u));
    // away from the boundary strip, where fills enter
    Real e = 0;
    for (int k : op.nodes)
      if (op.grid.point(k).norm() < 0.8) e = std::max(e, std::abs(au[k] - exact(op.grid.point(k))));
    hs.push_back(op.grid.spacing);
    errs.push_back(e);
  }
  CHECK(fit_order(hs, errs) >= 1.8);
}

TEST_CASE("Dirichlet solves with closed-form answers") {
  const DomainPtr d = disk(64);
  const LinearizedOperator op = assemble(cofactor(analytic_potential(AnalyticPotential::isotropic(), d)), *d);
  const Sampler poisson = [](const Vec2& x) { return (x.squaredNorm() - 1) / 4; };
  const ScalarField u =
      solve_dirichlet({&op, ScalarField(op.grid, 1.0), ScalarField::sample(op.grid, poisson)});
  Real e = 0;
  for (int k : op.nodes) e = std::max(e, std::abs(u[k] - poisson(op.grid.point(k))));
  CHECK(e < 1e-10);  // quadratic data is reproduced exactly by the stencil

  const auto q = analytic_potential(AnalyticPotential::quadratic(Vec2(2, 0.5).asDiagonal()), d);
  const LinearizedOperator qop = assemble(cofactor(q), *d);
  const Sampler affine = [](const Vec2& x) { return 0.3 - 1.2 * x.x() + 0.7 * x.y(); };
  const ScalarField a = solve_dirichlet({&qop, ScalarField(qop.grid, 0.0), ScalarField::sample(qop.grid, affine)});
  Real ea = 0;
  for (int k : qop.nodes) ea = std::max(ea, std::abs(a[k] - affine(qop.grid.point(k))));
  CHECK(ea < 1e-12);
}

TEST_CASE("manufactured solution converges at second order") {
  const Mat2 M = (Mat2() << 2, 0.3, 0.3, 0.6).finished();
  const Mat2 W = cofactor_matrix(M);
  const Sampler exact = [](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  const Sampler f = [&](const Vec2& x) {
    const Real s1 = std::sin(pi * x.x()), s2 = std::sin(pi * x.y()), c1 = std::cos(pi * x.x()), c2 = std::cos(pi * x.y());
    return pi * pi * (-W(0, 0) * s1 * s2 + 2 * W(0, 1) * c1 * c2 - W(1, 1) * s1 * s2);
  };
  std::vector<Real> hs, errs;
  for (int cells : {32, 64, 128}) {
    const DomainPtr d = square(cells);
    const LinearizedOperator op = assemble(cofactor(analytic_potential(AnalyticPotential::quadratic(M), d)), *d);
    const ScalarField u =
        solve_dirichlet({&op, ScalarField::sample(op.grid, f), ScalarField::sample(op.grid, exact)});
    Real e = 0;
    for (int k : op.nodes) e = std::max(e, std::abs(u[k] - exact(op.grid.point(k))));
    hs.push_back(op.grid.spacing);
    errs.push_back(e);
  }
  CHECK(fit_order(hs, errs) >= 1.8);
}

TEST_CASE("Green columns against a dense inverse") {
  std::mt19937_64 rng(5);
  const DomainPtr s = square(16);
  const LinearizedOperator lap = assemble(cofactor(analytic_potential(AnalyticPotential::isotropic(), s)), *s);
  const GreenOracleCheck c = green_oracle_check(lap, rng);
  CHECK(c.columns == lap.unknowns());
  CHECK(c.maxRelativeError <= 1e-8);
  CHECK(c.maxSymmetryError <= 1e-9);

  // Independent dense check of one column, outside the harness
  Eigen::MatrixXd dense = Eigen::MatrixXd(lap.interior);
  const Eigen::MatrixXd inv = dense.inverse();
  const int pole = lap.nodes[lap.unknowns() / 2];
  const GreenField g = green_function(lap, pole);
  const Real h2 = lap.grid.cell_area();
  Real err = 0, scale = 0;
  for (int r = 0; r < lap.unknowns(); ++r) {
    const Real ref = inv(r, lap.unknown[pole]) / h2;
    err = std::max(err, std::abs(g.values[lap.nodes[r]] - ref));
    scale = std::max(scale, std::abs(ref));
  }
  CHECK(err <= 1e-8 * scale);
}

TEST_CASE("disk Green function matches the logarithm") {
  const DomainPtr d = disk(256);
  const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
  const LinearizedOperator op = assemble(cofactor(iso), *d);
  const GreenField g = green_function(op, iso.argmin());
  Real worst = 0;
  // away from the pole, and away from the boundary where the logarithm is small
  for (int k : op.nodes) {
    const Real r = op.grid.point(k).norm();
    if (r < 0.15 || r > 0.5) continue;
    const Real ref = -std::log(r) / (2 * pi);
    worst = std::max(worst, std::abs(g.values[k] - ref) / ref);
  }
  CHECK(worst <= 0.03);
  CHECK_THROWS_AS(green_function(op, d->grid().index(0, 0)), Error);
}

TEST_CASE("Green tails and Lq bounds") {
  std::vector<std::vector<Real>> norms;
  for (int cells : {64, 128, 256}) {
    const DomainPtr d = disk(cells);
    const ConvexPotential iso = analytic_potential(AnalyticPotential::isotropic(), d);
    const GreenField g = green_function(assemble(cofactor(iso), *d), iso.argmin());
    const GreenTail t = green_tail_statistics(g, std::vector<Real>{g.values.values.maxCoeff() * 2}, {2, 4, 8});
    CHECK(t.volumes[0] == 0);
    norms.push_back(t.norms);
    const GreenBound b = green_lq_bound(g, 2);
    CHECK(b.conjugate == 2);
    CHECK(b.volume == doctest::Approx(pi).epsilon(0.02));
    CHECK(b.ratio == doctest::Approx(b.norm / std::sqrt(b.volume)));
    CHECK_THROWS_AS(green_lq_bound(g, 1), Error);
  }
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(norms[1][k] == doctest::Approx(norms[0][k]).epsilon(0.1));
    CHECK(norms[2][k] == doctest::Approx(norms[1][k]).epsilon(0.1));
  }
}

TEST_CASE("rescaling a quadratic section to the isotropic case") {
  const DomainPtr d = disk(128);
  const Mat2 M = Vec2(2, 0.5).asDiagonal();
  const ConvexPotential q = analytic_potential(AnalyticPotential::quadratic(M), d);
  // A = M^{1/2} is unimodular since det M = 1
  const Mat2 A = Vec2(std::sqrt(2.0), std::sqrt(0.5)).asDiagonal();
  const Sampler u = [](const Vec2& x) { return x.squaredNorm() / 4; };
  const Sampler f = [&](const Vec2&) { return cofactor_matrix(M).trace() / 2; };
  const RescaledProblem r = rescale_problem(q, u, f, {0, 0}, 0.2, A);
  CHECK(r.shear.unimodular());
  CHECK(transformed_residual(r) <= 10 * r.domain->grid().cell_area());
  const RescaledProblem id = rescale_problem(analytic_potential(AnalyticPotential::isotropic(), d), u, f, {0, 0}, 0.25);
  CHECK(id.map.matrix.isApprox(0.5 * Mat2::Identity()));
}
