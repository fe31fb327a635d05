#include "malab/lma.hpp"

#include <algorithm>
#include <cmath>

namespace malab {

Sampler sampler(const ScalarField& field) {
  return [&field](const Vec2& x) { return field.interpolate(x); };
}

namespace {

using Triplet = Eigen::Triplet<Real>;

}  // namespace

LinearizedOperator assemble(const CofactorField& cofactor, const ConvexDomain& domain) {
  return assemble(cofactor, domain, domain.mask());
}

LinearizedOperator assemble(const CofactorField& cof, const ConvexDomain& domain, const NodeMask& region) {
  const Grid& g = domain.grid();
  if (!(cof.grid == g)) throw Error(ErrorCode::InvalidArgument, "cofactor and domain lattices differ");
  LinearizedOperator op;
  op.grid = g;
  op.region = region;
  op.unknown.assign(g.size(), -1);
  op.dirichlet.assign(g.size(), 0);
  for (int k = 0; k < g.size(); ++k)
    if (domain.interior()[k] && region[k]) {
      op.unknown[k] = static_cast<int>(op.nodes.size());
      op.nodes.push_back(k);
    }
  if (op.nodes.empty()) throw Error(ErrorCode::DegenerateDomain, "operator region has no unknowns");
  for (int k : op.nodes) {
    const int i = g.col(k), j = g.row(k);
    for (const auto& o : kNeighbours) {
      const int q = g.index(i + o[0], j + o[1]);
      if (op.unknown[q] < 0) op.dirichlet[q] = 1;
    }
  }
  const NodeMask closure = op.closure();
  for (int k = 0; k < g.size(); ++k) {
    if (!closure[k]) continue;
    if (!cof.defined[k]) throw Error(ErrorCode::InvalidArgument, "cofactor undefined on an operator stencil node");
    Eigen::SelfAdjointEigenSolver<Mat2> es(cof.at(k), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) throw Error(ErrorCode::NotPSD, "cofactor has a negative eigenvalue");
  }

  // Quadratic form entries K(p, q); A = K / h^2 on unknown rows.
  std::vector<Triplet> inner, couple;
  const Real scale = 1 / g.cell_area();
  auto add = [&](int p, int q, Real v) {
    const int r = op.unknown[p];
    if (r < 0 || v == 0) return;
    if (op.unknown[q] >= 0)
      inner.emplace_back(r, op.unknown[q], v * scale);
    else
      couple.emplace_back(r, q, v * scale);
  };
  auto edge = [&](int p, int q, Real w) {
    add(p, p, w);
    add(q, q, w);
    add(p, q, -w);
    add(q, p, -w);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int p = g.index(i, j);
      if (i + 1 < g.nx) {
        const int q = g.index(i + 1, j);
        if (op.unknown[p] >= 0 || op.unknown[q] >= 0) edge(p, q, 0.5 * (cof.xx[p] + cof.xx[q]));
      }
      if (j + 1 < g.ny) {
        const int q = g.index(i, j + 1);
        if (op.unknown[p] >= 0 || op.unknown[q] >= 0) edge(p, q, 0.5 * (cof.yy[p] + cof.yy[q]));
      }
      if (i + 1 < g.nx && j + 1 < g.ny) {
        // corners 00, 10, 01, 11; D1 ~ (-1, 1, -1, 1), D2 ~ (-1, -1, 1, 1) over 2h
        const int c[4] = {p, g.index(i + 1, j), g.index(i, j + 1), g.index(i + 1, j + 1)};
        if (op.unknown[c[0]] < 0 && op.unknown[c[1]] < 0 && op.unknown[c[2]] < 0 && op.unknown[c[3]] < 0) continue;
        const Real m = 0.25 * (cof.xy[c[0]] + cof.xy[c[1]] + cof.xy[c[2]] + cof.xy[c[3]]);
        const Real d1[4] = {-1, 1, -1, 1}, d2[4] = {-1, -1, 1, 1};
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) add(c[a], c[b], 0.25 * m * (d1[a] * d2[b] + d2[a] * d1[b]));
      }
    }
  const auto n = static_cast<Eigen::Index>(op.nodes.size());
  op.interior.resize(n, n);
  op.interior.setFromTriplets(inner.begin(), inner.end());
  op.interior.prune(0.0);
  op.coupling.resize(n, g.size());
  op.coupling.setFromTriplets(couple.begin(), couple.end());
  op.coupling.prune(0.0);

  const Real tol = 1e-14 * scale;
  for (int c = 0; c < op.interior.outerSize() && op.mMatrix; ++c)
    for (SparseMatrix::InnerIterator it(op.interior, c); it; ++it)
      if (it.row() != it.col() && it.value() > tol) {
        op.mMatrix = false;
        break;
      }
  for (int c = 0; c < op.coupling.outerSize() && op.mMatrix; ++c)
    for (SparseMatrix::InnerIterator it(op.coupling, c); it; ++it)
      if (it.value() > tol) {
        op.mMatrix = false;
        break;
      }
  return op;
}

NodeMask LinearizedOperator::closure() const {
  NodeMask m = dirichlet;
  for (int k : nodes) m[k] = 1;
  return m;
}

ScalarField LinearizedOperator::apply(const ScalarField& u) const {
  VecX ui(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) ui[r] = u[nodes[r]];
  const VecX v = interior * ui + coupling * u.values;
  ScalarField out(grid, 0.0);
  for (std::size_t r = 0; r < nodes.size(); ++r) out[nodes[r]] = v[r];
  return out;
}

OperatorFactorization::OperatorFactorization(const LinearizedOperator& op) : op_(&op) {
  ldlt_.compute(op.interior);
  if (ldlt_.info() != Eigen::Success) throw Error(ErrorCode::SingularOperator, "operator factorization failed");
  if ((ldlt_.vectorD().array() <= 0).any())
    throw Error(ErrorCode::SingularOperator, "operator is not positive definite");
}

VecX OperatorFactorization::solve(const VecX& rhs) const {
  VecX x = ldlt_.solve(rhs);
  if (ldlt_.info() != Eigen::Success || !x.allFinite()) throw Error(ErrorCode::SingularOperator, "triangular solve failed");
  return x;
}

ScalarField solve_dirichlet(const DirichletProblem& problem) {
  const OperatorFactorization factor(*problem.op);
  return solve_dirichlet(problem, factor);
}

ScalarField solve_dirichlet(const DirichletProblem& problem, const OperatorFactorization& factor) {
  const LinearizedOperator& op = *problem.op;
  if (!(problem.rhs.grid == op.grid) || !(problem.boundary.grid == op.grid))
    throw Error(ErrorCode::InvalidArgument, "problem fields must live on the operator lattice");
  VecX rhs = -(op.coupling * problem.boundary.values);
  for (int r = 0; r < op.unknowns(); ++r) rhs[r] -= problem.rhs[op.nodes[r]];
  const VecX x = factor.solve(rhs);
  ScalarField u = problem.boundary;
  for (int r = 0; r < op.unknowns(); ++r) u[op.nodes[r]] = x[r];
  return u;
}

GreenField green_function(const OperatorFactorization& factor, int pole) {
  const LinearizedOperator& op = factor.op();
  if (pole < 0 || pole >= op.grid.size() || op.unknown[pole] < 0)
    throw Error(ErrorCode::PoleOnBoundary, "pole must be an unknown node of the operator region");
  VecX rhs = VecX::Zero(op.unknowns());
  rhs[op.unknown[pole]] = 1 / op.grid.cell_area();
  const VecX x = factor.solve(rhs);
  GreenField gf;
  gf.pole = pole;
  gf.values = ScalarField(op.grid, 0.0);
  for (int r = 0; r < op.unknowns(); ++r) gf.values[op.nodes[r]] = x[r];
  gf.region = op.region;
  return gf;
}

GreenField green_function(const LinearizedOperator& op, int pole) {
  const OperatorFactorization factor(op);
  return green_function(factor, pole);
}

GreenTail green_tail_statistics(const GreenField& green, const std::vector<Real>& levels,
                                const std::vector<Real>& exponents) {
  GreenTail tail;
  tail.levels = levels;
  tail.exponents = exponents;
  const Grid& g = green.values.grid;
  for (Real t : levels) {
    int n = 0;
    for (int k = 0; k < g.size(); ++k)
      if (green.region[k] && green.values[k] > t) ++n;
    tail.volumes.push_back(n * g.cell_area());
  }
  for (Real p : exponents) tail.norms.push_back(lp_norm(green.values, green.region, p));
  return tail;
}

GreenBound green_lq_bound(const GreenField& green, Real q, int n) {
  if (!(q > 0.5 * n)) throw Error(ErrorCode::ExponentOutOfRange, "Green bound needs q > n/2");
  GreenBound b;
  b.conjugate = q / (q - 1);
  b.norm = lp_norm(green.values, green.region, b.conjugate);
  b.volume = count(green.region) * green.values.grid.cell_area();
  b.ratio = b.norm / std::pow(b.volume, 2.0 / n - 1 / q);
  return b;
}

// ---- rescaling ---------------------------------------------------------------

ScalarField RescaledProblem::pull_back(const Sampler& g, Real factor) const {
  return ScalarField::sample(domain->grid(), [&](const Vec2& y) { return factor * g(map(y)); });
}

RescaledProblem rescale_problem(const ConvexPotential& potential, const Sampler& u, const Sampler& f, const Vec2& x0,
                                Real h, const Mat2& shear, Real b) {
  if (!(h > 0) || !(b > 0)) throw Error(ErrorCode::InvalidArgument, "rescaling needs h > 0 and b > 0");
  const Affine a(shear, Vec2::Zero());
  if (!a.unimodular(1e-12)) throw Error(ErrorCode::InvalidArgument, "shear must be unimodular");
  const int center = nearest_node(potential, x0);
  const Section s = section_at(potential, center, h);
  if (s.nodes() < 16 * 16) throw Error(ErrorCode::SectionTooSmall, "section carries fewer than 16^2 nodes");

  RescaledProblem out;
  out.height = h;
  out.a = h;
  out.b = b;
  out.shear = a;
  const Vec2 origin = potential.grid().point(center);
  out.map = Affine(std::sqrt(h) * shear.inverse(), origin);
  const Mat2 m = out.map.matrix;
  Eigen::SelfAdjointEigenSolver<Mat2> es(m * m.transpose());
  out.ellipse = Ellipse(origin, es.operatorSqrt());

  const Affine back = out.map.inverse();
  std::vector<Vec2> image;
  for (const auto& p : s.hull) image.push_back(back(p));
  if (back.det() < 0) std::reverse(image.begin(), image.end());
  Vec2 lo = image.front(), hi = image.front();
  for (const auto& p : image) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Real spacing = potential.grid().spacing / std::sqrt(std::abs(out.map.det()));
  const int cells = std::max(2, static_cast<int>(std::ceil((hi - lo).maxCoeff() / spacing)));
  out.domain = std::make_shared<const ConvexDomain>(ConvexDomain::on_grid(image, Grid::covering(lo, hi, cells)));
  const Grid& ig = out.domain->grid();

  if (potential.analytic) {
    const AnalyticPotential scaled = potential.analytic->composed(out.map, h).normalized_at(Vec2::Zero());
    out.potential = analytic_potential(scaled, out.domain);
  } else {
    const Vec2 grad = potential.gradient(center);
    const Real f0 = potential.field[center];
    ConvexPotential& p = out.potential;
    p.domain = out.domain;
    p.field = ScalarField::sample(ig, [&](const Vec2& y) {
      const Vec2 x = out.map(y);
      return (potential.field.interpolate(x) - f0 - grad.dot(x - origin)) / h;
    });
    p.detField = ScalarField::sample(ig, [&](const Vec2& y) { return potential.detField.interpolate(out.map(y)); });
    p.lambda = potential.lambda;
    p.Lambda = potential.Lambda;
    p.support = out.domain->mask();
  }
  out.u = out.pull_back(u, 1 / b);
  out.f = out.pull_back(f, h / b);
  return out;
}

Real transformed_residual(const RescaledProblem& problem) {
  const CofactorField cof = cofactor(problem.potential);
  ConvexPotential carrier;
  carrier.domain = problem.domain;
  carrier.field = problem.u;
  carrier.detField = problem.u;
  carrier.support = problem.domain->mask();
  const HessianField hu = hessian(carrier);
  Real worst = 0;
  for (int k = 0; k < hu.grid.size(); ++k)
    if (hu.valid[k]) worst = std::max(worst, std::abs((cof.at(k) * hu.at(k)).trace() - problem.f[k]));
  return worst;
}

}  // namespace malab
