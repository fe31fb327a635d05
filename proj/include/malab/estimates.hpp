#pragma once

#include "malab/functionals.hpp"
#include "malab/lma.hpp"

#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace malab {

inline constexpr Real kUnset = std::numeric_limits<Real>::quiet_NaN();

/// One measured inequality instance; maps to a row of results.csv.
struct TrialRow {
  std::string trial;
  std::string potential;
  int mesh = 0;
  Real q = kUnset;
  Real qprime = kUnset;
  Real p = kUnset;
  Real alpha = kUnset;
  Real lhs = 0;
  Real rhs = 0;
  Real cEmp = 0;
  bool pass = true;
};

/// lhs / rhs, clamped at zero for lhs <= 0; +inf for rhs = 0 < lhs.
Real empirical_ratio(Real lhs, Real rhs);

struct EstimateReport {
  std::string suite;
  std::vector<TrialRow> trials;
  Real cEmp = 0;     ///< max over trials
  Real spread = 0;   ///< (max - min) / max of the stability group
  Real tolerance = 0.5;
  bool pass = false;
  std::vector<std::pair<std::string, Real>> metrics;
  std::vector<std::string> notes;

  void add(TrialRow row);
  void metric(const std::string& name, Real value);
  std::optional<Real> find(const std::string& name) const;
  /// Spread of the per-(potential, mesh) maxima of the trial constants; pass
  /// iff every constant is finite and the spread is within tolerance.
  void judge_spread();
};

// ---- maximum principles ----------------------------------------------------------

enum class MaxPrincipleKind { Interior, BoundarySection, Global, Ball };
std::string_view to_string(MaxPrincipleKind kind);

/// 2/n - 1/q, or (3/4)(2/n - 1/q) for boundary balls.
Real max_principle_exponent(MaxPrincipleKind kind, Real q, int n = kDim);

/// {phi < (1 - alpha) min phi} with phi measured from its boundary maximum.
NodeMask sublevel_region(const ConvexPotential& potential, Real alpha);
/// Section at the domain boundary node nearest to x0.
NodeMask boundary_section_region(const ConvexPotential& potential, const Vec2& x0, Real t);
/// Omega intersected with the open ball B_delta(x0).
NodeMask ball_region(const ConvexPotential& potential, const Vec2& x0, Real delta);

struct MaxPrincipleCase {
  std::string potential;
  int mesh = 0;
  const ConvexPotential* phi = nullptr;
  NodeMask region;  ///< where Phi^{ij} u_ij = f is solved
  NodeMask probe;   ///< where sup u is taken; empty means the region
  Sampler f;
  Sampler boundary;
  /// Externally supplied u; checked to be a subsolution instead of solved.
  const ScalarField* given = nullptr;
};

struct MaxPrincipleOutcome {
  Real supU = 0;
  Real supBoundary = 0;  ///< sup of u^+ over the Dirichlet nodes
  Real volume = 0;
  Real fNorm = 0;
  Real lhs = 0;
  Real rhs = 0;
  Real cEmp = 0;
  ScalarField u;
};

/// Throws NotSubsolution when a given u violates Phi^{ij} u_ij >= f by more
/// than 1e-8 (relative to max|f|).
MaxPrincipleOutcome max_principle_trial(MaxPrincipleKind kind, const MaxPrincipleCase& c, Real q);
EstimateReport verify_max_principle(MaxPrincipleKind kind, const std::vector<MaxPrincipleCase>& cases, Real q,
                                    Real tolerance = 0.5);

// ---- Harnack, oscillation ------------------------------------------------------

struct HarnackCase {
  std::string potential;
  int mesh = 0;
  const ConvexPotential* phi = nullptr;
  int center = -1;
  Real t = 0;
  Sampler boundary;
  Sampler f;
};

struct HarnackOutcome {
  Real supHalf = 0;
  Real infHalf = 0;
  Real volume = 0;
  Real fNorm = 0;
  Real lhs = 0;
  Real rhs = 0;
  Real cEmp = 0;
};

/// Solves on S(x, t), then compares sup and inf over S(x, t/2). Throws
/// NegativeSolution if u < 0 somewhere on S(x, t).
HarnackOutcome harnack_trial(const HarnackCase& c, Real q);
EstimateReport verify_harnack(const std::vector<HarnackCase>& cases, Real q, Real tolerance = 0.5);

/// osc over S(x, rho) for each rho <= h; metrics alpha_emp (fitted decay
/// exponent in height units) and degenerate (1 when u is flat). Throws
/// InsufficientLadder with fewer than three usable heights.
EstimateReport oscillation_decay(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f, int x,
                                 Real h, const std::vector<Real>& rhos, Real q);

// ---- pointwise C^{1,alpha} ----------------------------------------------------------

struct InteriorC1AlphaSpec {
  Real alpha = 0.3;  ///< exponent of the pointwise estimate
  Real q = 2;
  Real r0 = 0.25;    ///< height cap of the N functional
  Real muStar = 0.5; ///< radius of the affine fit
  std::vector<Real> radii{0.0625, 0.125, 0.25, 0.5};
};

/// Affine fit around the minimum point of phi; metrics a, b1, b2, fit_error.
/// Throws MinimizerOnBoundary.
EstimateReport pointwise_c1alpha_interior(const ConvexPotential& potential, const ScalarField& u,
                                          const ScalarField& f, const InteriorC1AlphaSpec& spec);

struct CascadeLevel {
  int k = 0;
  Mat2 A = Mat2::Identity();
  Real a = 0;
  Vec2 b = Vec2::Zero();
  Real delta = 0;
  Real error = 0;       ///< ||u - l_{k-1}|| over S_{mu^k}
  Real drift = 0;
  Real driftBound = 0;  ///< 2 mu^{(k-1)(1+alpha)/2}
  int nodes = 0;
};

struct AffineCascade {
  Real mu = 0.25;
  Real alpha = 0.3;
  std::vector<CascadeLevel> levels;
  int terminal = 0;
  /// Least-squares slope of log_mu e_k against k.
  Real rate = kUnset;
  bool degenerate = false;
  /// Every increment |a_k - a_{k-1}| is at most 0.9 of the previous one.
  bool driftConverges = false;
  Real driftSum = 0;
  /// max_k drift_k / driftBound_k.
  Real cEmp = 0;
};

/// Dyadic comparison scheme at the minimum of phi: per level, normalize
/// S_{mu^k}, solve det D^2 w = 1 there with w = phi on the section boundary,
/// solve W^{ij} h_ij = 0 with h = u, and take l_k from h's value and gradient.
/// Stops when a section has fewer than `minNodes` nodes. Throws
/// ComparisonSolveFailed if an inner solve fails.
AffineCascade affine_cascade(const ConvexPotential& potential, const ScalarField& u, Real mu, Real alpha,
                             int maxLevels, int minNodes = 256);

// ---- comparison ---------------------------------------------------------------

struct ComparisonInput {
  const ConvexPotential* phi = nullptr;
  const ConvexPotential* w = nullptr;
  ScalarField u;
  ScalarField f;
  Real alpha1 = 0.5;
  Real alpha2 = 0.25;
  Real gamma = 0.5;
  Real q = 2;
};

struct ComparisonOutcome {
  Real solutionGap = 0;      ///< ||u - h||_{L^inf(U_alpha2)}
  Real forcingDefect = 0;    ///< ||f - trace((Phi - W) D^2 h)||_{L^q(U_alpha2)}
  Real cofactorDistance = 0; ///< ||Phi - W||_{L^q(U_alpha1)}
  Real cofactorHalfBall = 0; ///< ||Phi - W||_{L^q(B_1/2)}
  Real fNorm = 0;
  Real lhs = 0;
  Real rhs = 0;
  Real cEmp = 0;
  bool sideCondition = true;
};

/// Frobenius-norm L^q distance of two cofactor fields over the mask.
Real cofactor_distance(const CofactorField& a, const CofactorField& b, const NodeMask& mask, Real q);

ComparisonOutcome comparison_estimate(const ComparisonInput& input);

// ---- boundary estimates --------------------------------------------------------

/// phi_bc with its gradient, for C^{1,gamma} norms.
struct BoundaryData {
  std::string id;
  Sampler value;
  std::function<Vec2(const Vec2&)> gradient;
};

struct BoundaryC1AlphaSpec {
  Real alpha = 0.3;
  Real q = 2;
  Real theta = 0.5;
  Real gamma = 0.5;
  Real rho = 0.5;           ///< radius of the local boundary ball
  std::vector<Real> heights;  ///< hbar ladder; empty means 4h^2 * 2^k up to theta^2
};

/// b from the least-squares fit u - u(0) ~ b.x on the smallest resolvable
/// boundary section at `origin`; C_emp maximized over the hbar ladder.
/// Throws GeometryCheckFailed when the section and its enclosing ellipse
/// differ by a factor above 10.
EstimateReport pointwise_c1alpha_boundary(const ConvexPotential& potential, const ScalarField& u,
                                          const ScalarField& f, const BoundaryData& bc, int origin,
                                          const BoundaryC1AlphaSpec& spec);

/// |d_n u(0)| + s^{-(1+a)/2} max_{S_s} |u - d_n u(0) x_n| over the s ladder;
/// metrics dnu, alpha0_emp, degenerate.
EstimateReport boundary_holder_gradient(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f,
                                        int origin, const std::vector<Real>& sLadder, Real alpha0 = 0.5);

/// w = M x_n + phi - dt |x'|^2 - K x_n^2 with dt = delta^3/2,
/// M = 2^{n-1} Lambda^n / (lambda^{n-1} delta^{3n-3}), K = Lambda^n / (lambda dt)^{n-1}.
struct Barrier {
  Real delta = 0;
  Real deltaTilde = 0;
  Real M = 0;
  Real K = 0;
  ScalarField w;
};

Real barrier_slope(Real delta, Real lambda, Real Lambda, int n = kDim);

struct BarrierReport {
  Barrier barrier;
  /// max over inner nodes of Phi^{ij} w_ij + n Lambda (should be <= 0).
  Real margin = 0;
  /// max |grid value - symbolic value| for analytic quadratics, else NaN.
  Real symbolicError = kUnset;
  Real minOnBoundary = 0;  ///< min w over boundary nodes of Omega in B_delta
  Real minOnSphere = 0;    ///< min w - delta^3/2 over nodes of Omega near |x| = delta
  bool pass = false;
};

/// Requires a flat boundary edge through the origin with Omega in x_n >= 0
/// (GeometryUnsupported otherwise). phi is taken minus its supporting plane
/// at 0; D^2 w is the grid Hessian of phi plus the exact Hessian of the
/// quadratic correction.
BarrierReport build_barrier(const ConvexPotential& potential, Real delta, Real tolerance = 1e-2);

// ---- global estimates ----------------------------------------------------------

/// ExponentOutOfRange if p <= 1.
EstimateReport strong_type_report(const ConvexPotential& potential, const std::vector<ScalarField>& family, Real p);

struct NamedSampler {
  std::string id;
  Sampler f;
};

struct W1pSpec {
  Real q = 1.5;
  Real qprime = 0;  ///< 0 selects (n/2 + q)/2
  std::vector<Real> ps{2, 4, 5.5};
  Real gamma = 0.5;
  /// Node stride of the N-functional diagnostics.
  int diagnosticStride = 8;
};

/// One row per (f, p) with lhs = ||u||_{W^{1,p}}, rhs = ||phi_bc||_{C^{1,gamma}}
/// + ||f||_{L^q}. Metrics per f: f_norm_q, f_norm_q_plus (L^{q+1/4}),
/// gradient_ratio, n_ratio_p. Throws ExponentOutOfRange on inadmissible
/// exponents.
EstimateReport global_w1p_report(const ConvexPotential& potential, const std::vector<NamedSampler>& family,
                                 const W1pSpec& spec, const BoundaryData& bc);

/// Hoelder quotients of u over random node pairs at the fitted exponent and at
/// alpha0/(alpha0 + 3n); metrics beta_emp, c_beta, c_boundary.
EstimateReport global_holder_report(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f,
                                    const BoundaryData& bc, Real q, Real alpha, std::mt19937_64& rng,
                                    int pairs = 10000);

// ---- Green function and identities --------------------------------------------

struct GreenOracleCheck {
  Real maxRelativeError = 0;  ///< sparse column against the dense inverse
  Real maxSymmetryError = 0;  ///< |G(x, y) - G(y, x)| / max |G|
  int columns = 0;
};

/// Every Green column of a small operator against a dense inverse, plus
/// symmetry on random pole pairs.
GreenOracleCheck green_oracle_check(const LinearizedOperator& op, std::mt19937_64& rng, int pairs = 20);

struct NamedPotential {
  std::string id;
  const ConvexPotential* potential = nullptr;
};

/// ||G_V(zbar, .)||_{q'} / |V|^{2/n - 1/q} with V = S(zbar, c t*) for each
/// fraction c of the maximal interior height t* at the minimum point.
/// Spread is taken over all rows.
EstimateReport green_integrability_report(const std::vector<NamedPotential>& family, Real q,
                                          const std::vector<Real>& fractions = {0.9, 0.45, 0.225});

/// MA identity residual and cofactor divergence defect of one analytic
/// potential on disks with the given cell counts; metrics order_identity and
/// order_divergence.
EstimateReport identity_report(const AnalyticPotential& phi, const std::vector<int>& meshes);

// ---- affine invariance --------------------------------------------------------

struct InvarianceSample {
  Vec2 x;
  Real t = 0;
  Vec2 y;  ///< engulfing partner, inside S(x, t)
};

/// Sections of phi on Omega against those of phi o A on A^{-1} Omega at the
/// mapped points, for unimodular A. Metrics volume_dev, n_dev, theta_dev are
/// the largest relative deviations.
EstimateReport affine_invariance_report(const AnalyticPotential& phi, const ConvexDomain& domain, const Mat2& A,
                                        int cells, const std::vector<InvarianceSample>& samples, const Sampler& f,
                                        const NFunctionalSpec& spec);

}  // namespace malab
