#pragma once

#include "malab/core.hpp"
#include "malab/geometry.hpp"
#include "malab/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace malab {

enum class PotentialKind { IsotropicQuadratic, GeneralQuadratic, RadialPower, PerturbedQuadratic };

std::string_view to_string(PotentialKind kind);

/// Closed-form convex potential
///   phi(x) = base(T x) / a + slope . x + offset
/// with `base` one of the four library kinds:
///   isotropicQuadratic  |y|^2 / 2
///   generalQuadratic    y^T M y / 2
///   radialPower         |y|^2 / 2 + c |y|^4 / 12          (c >= 0)
///   perturbedQuadratic  |y|^2 / 2 + eps cos(pi y1) cos(pi y2)
struct AnalyticPotential {
  PotentialKind kind = PotentialKind::IsotropicQuadratic;
  Mat2 matrix = Mat2::Identity();
  Real coefficient = 0;
  Affine pre;
  Real scale = 1;
  Vec2 slope = Vec2::Zero();
  Real offset = 0;

  static AnalyticPotential isotropic();
  static AnalyticPotential quadratic(const Mat2& m);
  static AnalyticPotential radial_power(Real c);
  static AnalyticPotential perturbed(Real eps);

  Real value(const Vec2& x) const;
  Vec2 gradient(const Vec2& x) const;
  Mat2 hessian(const Vec2& x) const;
  Real det(const Vec2& x) const { return hessian(x).determinant(); }

  /// x -> phi(map x) / a.
  AnalyticPotential composed(const Affine& map, Real a = 1) const;
  /// phi minus its supporting plane at x0 (value and gradient vanish there).
  AnalyticPotential normalized_at(const Vec2& x0) const;

  /// Certified [min, max] of det D^2 phi over the polygon. Throws
  /// PinchingViolated when convexity cannot be certified.
  std::pair<Real, Real> det_interval(const std::vector<Vec2>& polygon) const;

  /// `kind:param=value,...`; composition adds a11..a22, b1, b2, scale, s1, s2
  /// and offset when they differ from the identity.
  std::string descriptor() const;
  static AnalyticPotential parse(const std::string& descriptor);
};

/// Discrete convex function with its Monge-Ampere data.
struct ConvexPotential {
  DomainPtr domain;
  ScalarField field;
  /// det D^2 phi (exact for analytic potentials, the solved g otherwise).
  ScalarField detField;
  Real lambda = 1;
  Real Lambda = 1;
  std::optional<AnalyticPotential> analytic;
  /// Nodes carrying values of phi; defaults to the domain mask.
  NodeMask support;

  const Grid& grid() const { return field.grid; }
  /// Support nodes whose eight neighbours are in the support.
  NodeMask inner() const;
  /// Central differences, second-order one-sided within one cell of the
  /// support boundary.
  Vec2 gradient(int node) const;
  Real value(int node) const { return field[node]; }
  /// Lowest support node (ties broken by index).
  int argmin() const;
};

/// Gradient of a field at a support node: central differences, second-order
/// one-sided within one cell of the support boundary.
Vec2 grid_gradient(const ScalarField& f, const NodeMask& support, int node);

/// Per-node symmetric 2x2 matrices. `valid` marks nodes computed from a full
/// stencil; `defined` nodes outside `valid` hold neighbour-averaged fills.
struct SymmetricField {
  Grid grid;
  VecX xx, xy, yy;
  NodeMask valid;
  NodeMask defined;

  Mat2 at(int k) const {
    Mat2 m;
    m << xx[k], xy[k], xy[k], yy[k];
    return m;
  }
  void set(int k, const Mat2& m) {
    xx[k] = m(0, 0);
    xy[k] = 0.5 * (m(0, 1) + m(1, 0));
    yy[k] = m(1, 1);
  }
};

struct HessianField : SymmetricField {};
struct CofactorField : SymmetricField {};

/// cof([[a, b], [b, c]]) = [[c, -b], [-b, a]]; equals det(M) M^{-1}.
template <typename Derived>
Matrix2<typename Derived::Scalar> cofactor_matrix(const Eigen::MatrixBase<Derived>& m) {
  Matrix2<typename Derived::Scalar> c;
  c << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return c;
}

/// Samples `analytic` on the domain lattice. Throws PinchingViolated when the
/// certified determinant interval leaves [lambda, Lambda].
ConvexPotential analytic_potential(const AnalyticPotential& analytic, DomainPtr domain,
                                   std::optional<std::pair<Real, Real>> pinching = std::nullopt);

HessianField hessian(const ConvexPotential& potential);
CofactorField cofactor(const HessianField& hessian);
CofactorField cofactor(const ConvexPotential& potential);

/// max_j |sum_i D_i Phi^{ij}| per node by central differences, at nodes whose
/// four axis neighbours carry full-stencil cofactors; zero elsewhere.
ScalarField divergence_defect(const CofactorField& cofactor, NodeMask* checked = nullptr);

/// max over inner nodes of |trace(Phi D^2 phi) - n g| with g the potential's
/// determinant field.
Real ma_identity_residual(const ConvexPotential& potential);

/// True when second differences along both axes and both diagonals are
/// >= -tol at every inner node.
bool discretely_convex(const ConvexPotential& potential, Real tol = 1e-8);

// ---- Dirichlet Monge-Ampere --------------------------------------------------

struct MongeAmpereOptions {
  Real tolerance = 1e-8;
  int maxSteps = 200;
  Real convexityFloor = 1e-6;
  Real armijo = 1e-4;
  Real backtrack = 0.5;
};

struct MongeAmpereStats {
  int steps = 0;
  std::vector<Real> residualHistory;
};

/// Damped Newton for det D^2 phi = g with phi = boundary on the non-interior
/// domain nodes. Throws NoConvergence (message carries the residual history)
/// or NonConvexIterate.
ConvexPotential solve_monge_ampere(DomainPtr domain, const ScalarField& g, const ScalarField& boundary,
                                   const MongeAmpereOptions& options = {}, MongeAmpereStats* stats = nullptr);

/// Same solve restricted to `region`: unknowns are interior domain nodes in
/// `region`, every other stencil node is a Dirichlet node taking `boundary`.
ConvexPotential solve_monge_ampere_on(DomainPtr domain, const NodeMask& region, const ScalarField& g,
                                      const ScalarField& boundary, const MongeAmpereOptions& options = {},
                                      MongeAmpereStats* stats = nullptr);

}  // namespace malab
