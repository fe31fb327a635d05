#include "malab/potential.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

namespace malab {

namespace {

using Triplet = Eigen::Triplet<Real>;
using SparseMatrix = Eigen::SparseMatrix<Real>;

struct Layout {
  std::vector<int> unknown;  // node -> unknown index or -1
  std::vector<int> node;     // unknown index -> node
};

Layout layout(const ConvexDomain& domain, const NodeMask& region) {
  const Grid& g = domain.grid();
  Layout l;
  l.unknown.assign(g.size(), -1);
  for (int k = 0; k < g.size(); ++k)
    if (domain.interior()[k] && region[k]) {
      l.unknown[k] = static_cast<int>(l.node.size());
      l.node.push_back(k);
    }
  return l;
}

struct LocalHessian {
  Real a, b, c;
};

LocalHessian local_hessian(const ScalarField& u, int i, int j) {
  const Real h2 = u.grid.cell_area();
  const Real p = u.at(i, j);
  return {((u.at(i + 1, j) - p) - (p - u.at(i - 1, j))) / h2,
          ((u.at(i + 1, j + 1) - u.at(i - 1, j + 1)) - (u.at(i + 1, j - 1) - u.at(i - 1, j - 1))) / (4 * h2),
          ((u.at(i, j + 1) - p) - (p - u.at(i, j - 1))) / h2};
}

VecX residual(const ScalarField& u, const ScalarField& g, const Layout& l) {
  VecX f(l.node.size());
  for (std::size_t r = 0; r < l.node.size(); ++r) {
    const int k = l.node[r];
    const auto [a, b, c] = local_hessian(u, u.grid.col(k), u.grid.row(k));
    f[r] = a * c - b * b - g[k];
  }
  return f;
}

SparseMatrix jacobian(const ScalarField& u, const Layout& l, Real floor) {
  const Grid& grid = u.grid;
  const Real h2 = grid.cell_area();
  std::vector<Triplet> t;
  t.reserve(9 * l.node.size());
  for (std::size_t r = 0; r < l.node.size(); ++r) {
    const int k = l.node[r];
    const int i = grid.col(k), j = grid.row(k);
    const auto [a, b, c] = local_hessian(u, i, j);
    Mat2 hm;
    hm << a, b, b, c;
    Eigen::SelfAdjointEigenSolver<Mat2> es(hm);
    const Vec2 ev = es.eigenvalues().cwiseMax(floor);
    const Mat2 proj = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    const Real ap = proj(0, 0), bp = proj(0, 1), cp = proj(1, 1);
    auto add = [&](int di, int dj, Real v) {
      const int col = l.unknown[grid.index(i + di, j + dj)];
      if (col >= 0) t.emplace_back(static_cast<int>(r), col, v);
    };
    add(0, 0, -2 * (ap + cp) / h2);
    add(1, 0, cp / h2);
    add(-1, 0, cp / h2);
    add(0, 1, ap / h2);
    add(0, -1, ap / h2);
    add(1, 1, -bp / (2 * h2));
    add(-1, -1, -bp / (2 * h2));
    add(-1, 1, bp / (2 * h2));
    add(1, -1, bp / (2 * h2));
  }
  const auto n = static_cast<Eigen::Index>(l.node.size());
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

/// Five-point Poisson solve Laplace(u) = 2 sqrt(g) with the Dirichlet data:
/// a convex starting point whose Hessian has the right trace scale.
ScalarField poisson_guess(const ScalarField& g, const ScalarField& boundary, const Layout& l) {
  ScalarField u = boundary;
  const Grid& grid = u.grid;
  const Real h2 = grid.cell_area();
  const auto n = static_cast<Eigen::Index>(l.node.size());
  std::vector<Triplet> t;
  VecX rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int k = l.node[r];
    const int i = grid.col(k), j = grid.row(k);
    rhs[r] = 2 * std::sqrt(std::max(g[k], 0.0)) * h2;
    t.emplace_back(r, r, -4.0);
    const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& o : nb) {
      const int q = grid.index(i + o[0], j + o[1]);
      if (l.unknown[q] >= 0)
        t.emplace_back(r, l.unknown[q], 1.0);
      else
        rhs[r] -= boundary[q];
    }
  }
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  Eigen::SparseLU<SparseMatrix> lu(m);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularOperator, "Poisson start-up solve failed");
  const VecX x = lu.solve(rhs);
  for (Eigen::Index r = 0; r < n; ++r) u[l.node[r]] = x[r];
  return u;
}

std::string history_text(const std::vector<Real>& h) {
  std::string s;
  for (Real v : h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.3e", s.empty() ? "" : " ", v);
    s += buf;
  }
  return s;
}

}  // namespace

ConvexPotential solve_monge_ampere_on(DomainPtr domain, const NodeMask& region, const ScalarField& g,
                                      const ScalarField& boundary, const MongeAmpereOptions& options,
                                      MongeAmpereStats* stats) {
  const Grid& grid = domain->grid();
  if (!(g.grid == grid) || !(boundary.grid == grid))
    throw Error(ErrorCode::InvalidArgument, "fields must live on the domain lattice");
  const Layout l = layout(*domain, region);
  if (l.node.empty()) throw Error(ErrorCode::DegenerateDomain, "no interior unknowns in the solve region");
  for (int k : l.node)
    if (!(g[k] > 0)) throw Error(ErrorCode::InvalidArgument, "right-hand side must be positive");

  ScalarField u = poisson_guess(g, boundary, l);
  VecX f = residual(u, g, l);
  std::vector<Real> history{f.cwiseAbs().maxCoeff()};
  int step = 0;
  while (history.back() > options.tolerance) {
    if (step == options.maxSteps)
      throw Error(ErrorCode::NoConvergence, "Newton stalled; max|F| history: " + history_text(history));
    Eigen::SparseLU<SparseMatrix> lu(jacobian(u, l, options.convexityFloor));
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularOperator, "Newton Jacobian is singular");
    const VecX d = lu.solve(-f);
    const Real merit = f.squaredNorm();
    Real t = 1;
    ScalarField trial = u;
    VecX ft;
    for (int bt = 0;; ++bt) {
      for (std::size_t r = 0; r < l.node.size(); ++r) trial[l.node[r]] = u[l.node[r]] + t * d[r];
      ft = residual(trial, g, l);
      if (ft.squaredNorm() <= (1 - 2 * options.armijo * t) * merit) break;
      if (bt == 60)
        throw Error(ErrorCode::NoConvergence, "line search failed; max|F| history: " + history_text(history));
      t *= options.backtrack;
    }
    u = std::move(trial);
    f = std::move(ft);
    history.push_back(f.cwiseAbs().maxCoeff());
    ++step;
  }
  if (stats) {
    stats->steps = step;
    stats->residualHistory = history;
  }

  ConvexPotential p;
  p.field = u;
  p.detField = g;
  p.support.assign(grid.size(), 0);
  for (int k : l.node) {
    const int i = grid.col(k), j = grid.row(k);
    p.support[k] = 1;
    for (const auto& o : kNeighbours) p.support[grid.index(i + o[0], j + o[1])] = 1;
  }
  Real lo = g[l.node[0]], hi = lo;
  for (int k : l.node) {
    lo = std::min(lo, g[k]);
    hi = std::max(hi, g[k]);
  }
  p.lambda = lo;
  p.Lambda = hi;
  p.domain = std::move(domain);
  if (!discretely_convex(p, 1e-8)) throw Error(ErrorCode::NonConvexIterate, "converged iterate is not discretely convex");
  return p;
}

ConvexPotential solve_monge_ampere(DomainPtr domain, const ScalarField& g, const ScalarField& boundary,
                                   const MongeAmpereOptions& options, MongeAmpereStats* stats) {
  const NodeMask all = domain->mask();
  ConvexPotential p = solve_monge_ampere_on(domain, all, g, boundary, options, stats);
  p.support = p.domain->mask();
  return p;
}

}  // namespace malab
