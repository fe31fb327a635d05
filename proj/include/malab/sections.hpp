#pragma once

#include "malab/potential.hpp"

#include <memory>
#include <vector>

namespace malab {

/// s(y) = phi(y) - phi(x) - Dphi(x).(y - x) over the support, +inf elsewhere.
/// The gradient is the discrete one at the center node.
ScalarField section_level(const ConvexPotential& potential, int center);

/// Lattice trace of {y in support : level(y) < height}.
struct Section {
  int centerNode = -1;
  Vec2 center = Vec2::Zero();
  Real height = 0;
  NodeMask mask;
  std::shared_ptr<const ScalarField> level;
  std::vector<Vec2> hull;
  Real volume = 0;

  int nodes() const { return count(mask); }
};

/// Builds a section from a precomputed level function.
Section make_section(std::shared_ptr<const ScalarField> level, int center, Real height);

/// Section centered at the node nearest to x. Throws OutsideDomain when x
/// is not in the closed domain.
Section section(const ConvexPotential& potential, const Vec2& x, Real height);
Section section_at(const ConvexPotential& potential, int center, Real height);

/// Area of {level < height}: per lattice cell, the level is interpolated
/// linearly on two triangles and the sub-threshold part is measured exactly.
/// Only cells whose four corners carry finite levels count.
Real section_volume(const ScalarField& level, Real height);
inline Real section_volume(const Section& s) { return s.level ? section_volume(*s.level, s.height) : 0.0; }

/// Node nearest to x among the potential's support; OutsideDomain if x is
/// not in the closed domain.
int nearest_node(const ConvexPotential& potential, const Vec2& x);

/// Largest height whose section contains no non-inner support node, i.e. the
/// minimum of the level over the support boundary.
Real maximal_interior_height(const ConvexPotential& potential, int center);
Real maximal_interior_height(const ConvexPotential& potential, const Vec2& x);

/// h_k = lo * ratio^k for h_k <= hi.
std::vector<Real> height_ladder(Real lo, Real hi, Real ratio = 2);
/// Smallest ladder height for a lattice: 4 h^2.
inline Real ladder_floor(const Grid& g) { return 4 * g.cell_area(); }

struct EngulfingSample {
  int x;
  Real t;
  int y;
};

/// Max over samples of the least theta with S(x, t) inside S(y, theta t).
/// Samples with y outside S(x, t) are skipped.
Real engulfing_constant(const ConvexPotential& potential, const std::vector<EngulfingSample>& samples);

struct SeparationReport {
  Real minRatio = 0;
  Real maxRatio = 0;
  int pairs = 0;
  bool pass = false;
};

/// (phi(x) - phi(x0) - Dphi(x0).(x - x0)) / |x - x0|^2 over pairs of domain
/// boundary nodes; passes iff every ratio lies in [rho, 1/rho].
SeparationReport check_quadratic_separation(const ConvexPotential& potential, Real rho);

struct VolumeGrowth {
  std::vector<Real> heights;
  std::vector<Real> volumes;
  Real exponent = 0;
};

/// Fitted exponent of |S(x, t)| ~ t^e over the usable heights (nonempty and,
/// for inner centers, below the maximal interior height). Throws
/// InsufficientLadder with fewer than four.
VolumeGrowth volume_growth_scan(const ConvexPotential& potential, const Vec2& x, const std::vector<Real>& heights);

}  // namespace malab
