#pragma once

#include "malab/lma.hpp"
#include "malab/sections.hpp"

#include <random>
#include <string>
#include <vector>

namespace malab {

// ---- N functional --------------------------------------------------------------

struct NFunctionalSpec {
  Real alpha = 0.3;
  Real q = 2;
  Real r0 = 1;
  int n = kDim;

  /// Throws ExponentOutOfRange unless q > n/2 and 0 < alpha < 1.
  void validate() const;
  Real power() const { return 0.5 * (1 - alpha); }
};

/// r^{(1-alpha)/2} (mean of |f|^q over the section nodes)^{1/q}. Throws
/// EmptySection when the section has no nodes.
Real n_functional(const ConvexPotential& potential, const ScalarField& f, const NFunctionalSpec& spec, int z, Real r);

/// Supremum of n_functional over the ladder 4h^2 * 2^k <= r0, plus r0 itself.
Real n_functional_sup(const ConvexPotential& potential, const ScalarField& f, const NFunctionalSpec& spec, int z);

/// n_functional_sup at each listed node, sharing one level pass per node.
std::vector<Real> n_functional_field(const ConvexPotential& potential, const ScalarField& f,
                                     const NFunctionalSpec& spec, const std::vector<int>& nodes);

// ---- maximal function ----------------------------------------------------------

/// M(f) per support node and the ladder it was taken over.
struct MaximalField {
  ScalarField values;
  std::vector<Real> ladder;
};

/// Supremum of section averages of |f| (node means) over t = 4h^2 * 2^k,
/// continued until the section exhausts the support.
MaximalField maximal_function(const ConvexPotential& potential, const ScalarField& f);
/// Several functions at once; one level pass per center.
std::vector<MaximalField> maximal_function(const ConvexPotential& potential, const std::vector<ScalarField>& fs);

// ---- grid analysis -------------------------------------------------------------

/// ||u||_p + || |Du| ||_p over the mask.
Real w1p_norm(const ScalarField& u, const NodeMask& mask, Real p);

/// sup|g| + sup|Dg| + [Dg]_gamma over the listed nodes (Hoelder seminorm on
/// all pairs).
Real c1gamma_norm(const Sampler& value, const std::function<Vec2(const Vec2&)>& gradient, const Grid& grid,
                  const std::vector<int>& nodes, Real gamma);

/// l(x) = a + b.(x - origin) minimizing the squared error over the mask.
struct AffineFit {
  Real a = 0;
  Vec2 b = Vec2::Zero();
  Vec2 origin = Vec2::Zero();
  Real maxError = 0;

  Real operator()(const Vec2& x) const { return a + b.dot(x - origin); }
};

AffineFit fit_affine(const ScalarField& u, const NodeMask& mask, const Vec2& origin);

/// max - min over the mask (0 for an empty mask).
Real oscillation(const ScalarField& u, const NodeMask& mask);

/// Nodes whose center lies in the Euclidean ball.
NodeMask ball_mask(const Grid& grid, const NodeMask& support, const Vec2& center, Real radius);

NodeMask mask_and(const NodeMask& a, const NodeMask& b);

/// Mask volume by cell counting.
inline Real mask_volume(const Grid& g, const NodeMask& m) { return count(m) * g.cell_area(); }

// ---- inputs --------------------------------------------------------------------

/// |x - x0|^{-s}, clamped to cap^{-s} inside distance `cap`.
Sampler singular_power(const Vec2& x0, Real s, Real cap);

/// Smooth random field: a few random Fourier modes plus Gaussian bumps,
/// taken in absolute value and shifted to be >= floor.
ScalarField random_smooth_field(const Grid& grid, std::mt19937_64& rng, Real floor = 0.05);

/// A named analytic potential.
struct FamilyMember {
  std::string id;
  AnalyticPotential analytic;
};

/// Five potentials with det D^2 phi certified in [1/2, 2] on the unit disk:
/// isotropic, diag(2, 1/2), a rotated diag(3/2, 4/5), a perturbation with
/// eps = 0.02, and the radial power with c = 1/2.
std::vector<FamilyMember> pinched_family();
inline constexpr Real kFamilyLambda = 0.5;
inline constexpr Real kFamilyUpper = 2.0;

/// (max - min) / max; zero for an empty list or max = 0.
Real spread(const std::vector<Real>& values);

}  // namespace malab
