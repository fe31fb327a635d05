#pragma once

#include "malab/potential.hpp"
#include "malab/sections.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

namespace malab {

using SparseMatrix = Eigen::SparseMatrix<Real>;
using Sampler = std::function<Real(const Vec2&)>;

/// Bilinear reader over a field.
Sampler sampler(const ScalarField& field);

/// Discrete -d_i(Phi^{ij} d_j u) on the unknown nodes of a region.
///
/// Unknowns are domain-interior nodes inside the region; every other node of
/// their 3x3 stencils is a Dirichlet node. Axis couplings use edge-averaged
/// Phi^{11}, Phi^{22}; the mixed term is a per-cell bilinear form with the
/// cell-averaged Phi^{12}, which keeps the matrix symmetric.
struct LinearizedOperator {
  Grid grid;
  NodeMask region;
  std::vector<int> unknown;  ///< node -> unknown index, -1 for non-unknowns
  std::vector<int> nodes;    ///< unknown index -> node
  NodeMask dirichlet;        ///< stencil nodes that are not unknowns
  SparseMatrix interior;     ///< unknown x unknown, scaled by 1/h^2
  SparseMatrix coupling;     ///< unknown x grid node (Dirichlet columns only)
  bool mMatrix = true;       ///< all off-diagonal entries <= 0

  int unknowns() const { return static_cast<int>(nodes.size()); }
  /// Full operator action on a field; entries at non-unknowns are zero.
  ScalarField apply(const ScalarField& u) const;
  /// Unknowns plus Dirichlet nodes.
  NodeMask closure() const;
};

/// Throws NotPSD if a node matrix has an eigenvalue below -1e-8.
LinearizedOperator assemble(const CofactorField& cofactor, const ConvexDomain& domain);
LinearizedOperator assemble(const CofactorField& cofactor, const ConvexDomain& domain, const NodeMask& region);

/// Sparse LDL^T factorization of an operator; read-only after construction.
class OperatorFactorization {
 public:
  explicit OperatorFactorization(const LinearizedOperator& op);
  VecX solve(const VecX& rhs) const;
  const LinearizedOperator& op() const { return *op_; }

 private:
  const LinearizedOperator* op_;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
};

/// Phi^{ij} u_ij = f in the unknowns, u = boundary elsewhere.
struct DirichletProblem {
  const LinearizedOperator* op = nullptr;
  ScalarField rhs;
  ScalarField boundary;
};

ScalarField solve_dirichlet(const DirichletProblem& problem);
ScalarField solve_dirichlet(const DirichletProblem& problem, const OperatorFactorization& factor);

/// Column G_V(., pole) of the discrete Green function, L G = delta / h^2.
struct GreenField {
  int pole = -1;
  ScalarField values;
  NodeMask region;
};

GreenField green_function(const OperatorFactorization& factor, int pole);
GreenField green_function(const LinearizedOperator& op, int pole);

struct GreenTail {
  std::vector<Real> levels;
  std::vector<Real> volumes;  ///< |{G > t}| by cell counting
  std::vector<Real> exponents;
  std::vector<Real> norms;    ///< ||G||_{L^p(V)} per requested exponent
};

GreenTail green_tail_statistics(const GreenField& green, const std::vector<Real>& levels,
                                const std::vector<Real>& exponents = {});

struct GreenBound {
  Real conjugate = 0;  ///< q' = q / (q - 1)
  Real norm = 0;       ///< ||G||_{L^{q'}(V)}
  Real volume = 0;     ///< |V|
  Real ratio = 0;      ///< norm / |V|^{2/n - 1/q}
};

/// Throws ExponentOutOfRange for q <= n/2.
GreenBound green_lq_bound(const GreenField& green, Real q, int n = kDim);

// ---- rescaling ---------------------------------------------------------------

/// Image of a section under y -> T y = x0 + sqrt(h) A^{-1} y, with
///   phi_h(y) = phi(T y) / h (minus its supporting plane at 0),
///   u~(y) = u(T y) / b,   f~(y) = (h / b) f(T y).
/// The factor h / b is (det T)^2 a^{1-n} b^{-1} with a = h and |det A| = 1.
struct RescaledProblem {
  Real height = 0;
  Real a = 1;
  Real b = 1;
  Affine shear;    ///< A, unimodular
  Affine map;      ///< T
  Ellipse ellipse; ///< sqrt(h) A^{-1} B_1 around x0
  std::shared_ptr<const ConvexDomain> domain;
  ConvexPotential potential;
  ScalarField u;
  ScalarField f;

  /// g(T y) * factor on the image lattice.
  ScalarField pull_back(const Sampler& g, Real factor = 1) const;
};

/// Throws SectionTooSmall when the section carries fewer than 16^2 nodes
/// (the image lattice keeps the source node density).
RescaledProblem rescale_problem(const ConvexPotential& potential, const Sampler& u, const Sampler& f, const Vec2& x0,
                                Real h, const Mat2& shear = Mat2::Identity(), Real b = 1);

/// max over inner image nodes of |trace(Phi~ D^2 u~) - f~|.
Real transformed_residual(const RescaledProblem& problem);

}  // namespace malab
