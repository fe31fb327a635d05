#include "malab/estimates.hpp"

#include "malab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace malab {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

Real max_over(const ScalarField& u, const NodeMask& mask) {
  Real m = -kInf;
  for (int k = 0; k < u.grid.size(); ++k)
    if (mask[k]) m = std::max(m, u[k]);
  return m;
}

Real min_over(const ScalarField& u, const NodeMask& mask) {
  Real m = kInf;
  for (int k = 0; k < u.grid.size(); ++k)
    if (mask[k]) m = std::min(m, u[k]);
  return m;
}

ScalarField sampled(const Grid& g, const Sampler& s) {
  return s ? ScalarField::sample(g, s) : ScalarField(g, 0.0);
}

std::vector<int> nodes_of(const NodeMask& mask) {
  std::vector<int> out;
  for (std::size_t k = 0; k < mask.size(); ++k)
    if (mask[k]) out.push_back(static_cast<int>(k));
  return out;
}

/// Second differences at a node with a full stencil.
Mat2 central_hessian(const ScalarField& u, int k) {
  const Grid& g = u.grid;
  const int i = g.col(k), j = g.row(k);
  const Real h2 = g.cell_area();
  Mat2 m;
  m(0, 0) = (u.at(i + 1, j) - 2 * u[k] + u.at(i - 1, j)) / h2;
  m(1, 1) = (u.at(i, j + 1) - 2 * u[k] + u.at(i, j - 1)) / h2;
  m(0, 1) = m(1, 0) = (u.at(i + 1, j + 1) - u.at(i + 1, j - 1) - u.at(i - 1, j + 1) + u.at(i - 1, j - 1)) / (4 * h2);
  return m;
}

/// Furthest boundary crossing of a ray from a point of a convex polygon; for
/// points on the boundary this skips the crossing at the start.
Real ray_reach(const std::vector<Vec2>& ccw, const Vec2& origin, const Vec2& dir) {
  Real best = 0;
  for (std::size_t k = 0; k < ccw.size(); ++k) {
    const Vec2& a = ccw[k];
    const Vec2 e = ccw[(k + 1) % ccw.size()] - a;
    const Real den = cross(dir, e);
    if (std::abs(den) < 1e-300) continue;
    const Vec2 w = a - origin;
    const Real t = cross(w, e) / den;
    const Real s = cross(w, dir) / den;
    if (t >= 0 && s >= -1e-12 && s <= 1 + 1e-12) best = std::max(best, t);
  }
  return best;
}

/// Positive root of |shape^{-1}(origin + t dir - center)| = 1.
Real ellipse_reach(const Ellipse& e, const Vec2& origin, const Vec2& dir) {
  const Mat2 inv = e.shape.inverse();
  const Vec2 p = inv * (origin - e.center), d = inv * dir;
  const Real a = d.squaredNorm(), b = 2 * p.dot(d), c = p.squaredNorm() - 1;
  const Real disc = std::max(0.0, b * b - 4 * a * c);
  return (-b + std::sqrt(disc)) / (2 * a);
}

void check_q(Real q) {
  if (!(q > 0.5 * kDim)) throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need q > n/2");
}

}  // namespace

// ---- reports -------------------------------------------------------------------

Real empirical_ratio(Real lhs, Real rhs) {
  if (!(lhs > 0)) return 0;
  return rhs > 0 ? lhs / rhs : kInf;
}

void EstimateReport::add(TrialRow row) {
  cEmp = std::max(cEmp, row.cEmp);
  trials.push_back(std::move(row));
}

void EstimateReport::metric(const std::string& name, Real value) {
  for (auto& [k, v] : metrics)
    if (k == name) {
      v = value;
      return;
    }
  metrics.emplace_back(name, value);
}

std::optional<Real> EstimateReport::find(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  return std::nullopt;
}

void EstimateReport::judge_spread() {
  std::map<std::pair<std::string, int>, Real> groups;
  bool finite = true;
  for (const auto& t : trials) {
    Real& g = groups[{t.potential, t.mesh}];
    g = std::max(g, t.cEmp);
    finite = finite && std::isfinite(t.cEmp) && t.cEmp >= 0;
  }
  std::vector<Real> cs;
  for (const auto& [key, c] : groups) cs.push_back(c);
  spread = malab::spread(cs);
  pass = finite && spread <= tolerance;
}

// ---- maximum principles ----------------------------------------------------------

std::string_view to_string(MaxPrincipleKind kind) {
  switch (kind) {
    case MaxPrincipleKind::Interior: return "interior";
    case MaxPrincipleKind::BoundarySection: return "boundarySection";
    case MaxPrincipleKind::Global: return "global";
    case MaxPrincipleKind::Ball: return "ball";
  }
  return "unknown";
}

Real max_principle_exponent(MaxPrincipleKind kind, Real q, int n) {
  return kind == MaxPrincipleKind::Ball ? exponents::ball_volume_exponent(q, n) : exponents::volume_exponent(q, n);
}

NodeMask sublevel_region(const ConvexPotential& potential, Real alpha) {
  const ConvexDomain& dom = *potential.domain;
  const Grid& g = potential.grid();
  Real top = -kInf, low = kInf;
  for (int k = 0; k < g.size(); ++k) {
    if (!potential.support[k]) continue;
    low = std::min(low, potential.field[k]);
    if (dom.is_boundary_node(k)) top = std::max(top, potential.field[k]);
  }
  const Real cut = (1 - alpha) * (low - top);
  NodeMask m(g.size(), 0);
  for (int k = 0; k < g.size(); ++k)
    if (potential.support[k] && potential.field[k] - top < cut) m[k] = 1;
  return m;
}

NodeMask boundary_section_region(const ConvexPotential& potential, const Vec2& x0, Real t) {
  const Grid& g = potential.grid();
  int best = -1;
  Real dist = kInf;
  for (int k = 0; k < g.size(); ++k)
    if (potential.domain->is_boundary_node(k) && (g.point(k) - x0).squaredNorm() < dist) {
      dist = (g.point(k) - x0).squaredNorm();
      best = k;
    }
  if (best < 0) throw Error(ErrorCode::OutsideDomain, "domain has no boundary nodes");
  return section_at(potential, best, t).mask;
}

NodeMask ball_region(const ConvexPotential& potential, const Vec2& x0, Real delta) {
  return ball_mask(potential.grid(), potential.domain->mask(), x0, delta);
}

MaxPrincipleOutcome max_principle_trial(MaxPrincipleKind kind, const MaxPrincipleCase& c, Real q) {
  check_q(q);
  const ConvexPotential& phi = *c.phi;
  const Grid& g = phi.grid();
  const LinearizedOperator op = assemble(cofactor(phi), *phi.domain, c.region);
  const ScalarField f = sampled(g, c.f);
  MaxPrincipleOutcome out;
  if (c.given) {
    out.u = *c.given;
    const ScalarField lu = op.apply(out.u);
    Real scale = 1;
    for (int k : op.nodes) scale = std::max(scale, std::abs(f[k]));
    for (int k : op.nodes)
      if (-lu[k] < f[k] - 1e-8 * scale)
        throw Error(ErrorCode::NotSubsolution, "given u violates the subsolution inequality at node " + std::to_string(k));
  } else {
    out.u = solve_dirichlet({&op, f, sampled(g, c.boundary)});
  }
  const NodeMask probe = c.probe.empty() ? op.closure() : c.probe;
  out.supU = max_over(out.u, probe);
  out.supBoundary = std::max(0.0, max_over(out.u, op.dirichlet));
  out.volume = mask_volume(g, c.region);
  out.fNorm = lp_norm(f, c.region, q);
  out.lhs = std::max(0.0, out.supU - out.supBoundary);
  out.rhs = std::pow(out.volume, max_principle_exponent(kind, q)) * out.fNorm;
  out.cEmp = empirical_ratio(out.lhs, out.rhs);
  return out;
}

EstimateReport verify_max_principle(MaxPrincipleKind kind, const std::vector<MaxPrincipleCase>& cases, Real q,
                                    Real tolerance) {
  EstimateReport r;
  r.suite = "max-principle/" + std::string(to_string(kind));
  r.tolerance = tolerance;
  for (const auto& c : cases) {
    const MaxPrincipleOutcome o = max_principle_trial(kind, c, q);
    TrialRow row;
    row.trial = std::string(to_string(kind));
    row.potential = c.potential;
    row.mesh = c.mesh;
    row.q = q;
    row.lhs = o.lhs;
    row.rhs = o.rhs;
    row.cEmp = o.cEmp;
    row.pass = std::isfinite(o.cEmp) && o.cEmp >= 0;
    r.add(row);
  }
  r.judge_spread();
  return r;
}

// ---- Harnack, oscillation ------------------------------------------------------

HarnackOutcome harnack_trial(const HarnackCase& c, Real q) {
  check_q(q);
  const ConvexPotential& phi = *c.phi;
  const Grid& g = phi.grid();
  const Section full = section_at(phi, c.center, c.t);
  const Section half = make_section(full.level, c.center, 0.5 * c.t);
  const LinearizedOperator op = assemble(cofactor(phi), *phi.domain, full.mask);
  const ScalarField f = sampled(g, c.f);
  const ScalarField u = solve_dirichlet({&op, f, sampled(g, c.boundary)});
  if (min_over(u, op.closure()) < -1e-12)
    throw Error(ErrorCode::NegativeSolution, "solution takes negative values on the section");
  HarnackOutcome o;
  o.supHalf = max_over(u, half.mask);
  o.infHalf = min_over(u, half.mask);
  o.volume = mask_volume(g, full.mask);
  o.fNorm = lp_norm(f, full.mask, q);
  o.lhs = o.supHalf;
  o.rhs = o.infHalf + std::pow(o.volume, exponents::volume_exponent(q)) * o.fNorm;
  o.cEmp = empirical_ratio(o.lhs, o.rhs);
  return o;
}

EstimateReport verify_harnack(const std::vector<HarnackCase>& cases, Real q, Real tolerance) {
  EstimateReport r;
  r.suite = "harnack";
  r.tolerance = tolerance;
  int n = 0;
  for (const auto& c : cases) {
    const HarnackOutcome o = harnack_trial(c, q);
    TrialRow row;
    row.trial = "case-" + std::to_string(n++);
    row.potential = c.potential;
    row.mesh = c.mesh;
    row.q = q;
    row.lhs = o.lhs;
    row.rhs = o.rhs;
    row.cEmp = o.cEmp;
    row.pass = std::isfinite(o.cEmp);
    r.add(row);
  }
  r.judge_spread();
  return r;
}

EstimateReport oscillation_decay(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f, int x,
                                 Real h, const std::vector<Real>& rhos, Real q) {
  check_q(q);
  const auto level = std::make_shared<const ScalarField>(section_level(potential, x));
  const Section top = make_section(level, x, h);
  const Real base = oscillation(u, top.mask) +
                    std::pow(h, exponents::oscillation_height_exponent(q)) * lp_norm(f, top.mask, q);
  std::vector<Real> heights, oscs;
  for (Real rho : rhos) {
    if (rho > h) continue;
    const Section s = make_section(level, x, rho);
    if (s.nodes() < 4) continue;
    heights.push_back(rho);
    oscs.push_back(oscillation(u, s.mask));
  }
  if (heights.size() < 3) throw Error(ErrorCode::InsufficientLadder, "oscillation ladder needs three usable heights");

  EstimateReport r;
  r.suite = "oscillation";
  const Real peak = *std::max_element(oscs.begin(), oscs.end());
  const bool degenerate = !(peak > 1e-13 * std::max(1.0, sup_norm(u, potential.support)));
  Real alpha = kUnset;
  if (!degenerate) {
    std::vector<Real> lx, ly;
    for (std::size_t k = 0; k < heights.size(); ++k)
      if (oscs[k] > 0) {
        lx.push_back(std::log(heights[k]));
        ly.push_back(std::log(oscs[k]));
      }
    alpha = lx.size() >= 2 ? fit_slope(lx, ly) : kUnset;
  }
  const Real used = std::isfinite(alpha) ? std::clamp(alpha, 0.0, 1.0) : 0.0;
  for (std::size_t k = 0; k < heights.size(); ++k) {
    TrialRow row;
    row.trial = "rho=" + std::to_string(heights[k]);
    row.q = q;
    row.alpha = alpha;
    row.lhs = oscs[k];
    row.rhs = std::pow(heights[k] / h, used) * base;
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    r.add(row);
  }
  r.metric("alpha_emp", alpha);
  r.metric("degenerate", degenerate ? 1 : 0);
  r.pass = std::isfinite(r.cEmp) && (degenerate || alpha > 0);
  if (degenerate) r.notes.push_back("u is flat on the ladder; decay fit skipped");
  return r;
}

// ---- pointwise C^{1,alpha} ----------------------------------------------------------

EstimateReport pointwise_c1alpha_interior(const ConvexPotential& potential, const ScalarField& u,
                                          const ScalarField& f, const InteriorC1AlphaSpec& spec) {
  const int z = potential.argmin();
  if (!potential.inner()[z]) throw Error(ErrorCode::MinimizerOnBoundary, "minimum point of phi is not interior");
  const Grid& g = potential.grid();
  const Vec2 zbar = g.point(z);
  const AffineFit fit = fit_affine(u, ball_mask(g, potential.support, zbar, spec.muStar), zbar);
  NFunctionalSpec ns;
  ns.alpha = spec.alpha;
  ns.q = spec.q;
  ns.r0 = spec.r0;
  const Real rhs = sup_norm(u, potential.support) + n_functional_sup(potential, f, ns, z);

  EstimateReport r;
  r.suite = "c1alpha-interior";
  for (Real rad : spec.radii) {
    if (rad > spec.muStar) continue;
    const NodeMask ball = ball_mask(g, potential.support, zbar, rad);
    Real err = 0;
    for (int k = 0; k < g.size(); ++k)
      if (ball[k]) err = std::max(err, std::abs(u[k] - fit(g.point(k))));
    TrialRow row;
    row.trial = "r=" + std::to_string(rad);
    row.q = spec.q;
    row.alpha = spec.alpha;
    row.lhs = std::pow(rad, -(1 + spec.alpha)) * err + std::abs(fit.a) + fit.b.norm();
    row.rhs = rhs;
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    r.add(row);
  }
  r.metric("a", fit.a);
  r.metric("b1", fit.b.x());
  r.metric("b2", fit.b.y());
  r.metric("fit_error", fit.maxError);
  r.pass = !r.trials.empty() && std::isfinite(r.cEmp);
  return r;
}

AffineCascade affine_cascade(const ConvexPotential& potential, const ScalarField& u, Real mu, Real alpha,
                             int maxLevels, int minNodes) {
  if (!(mu > 0 && mu < 1)) throw Error(ErrorCode::InvalidArgument, "cascade ratio must lie in (0, 1)");
  const int z = potential.argmin();
  const Grid& g = potential.grid();
  const Vec2 zbar = g.point(z);
  const auto level = std::make_shared<const ScalarField>(section_level(potential, z));
  const ScalarField unit(g, 1.0);

  AffineCascade c;
  c.mu = mu;
  c.alpha = alpha;
  Real aPrev = 0;
  Vec2 bPrev = Vec2::Zero();
  for (int k = 1; k <= maxLevels; ++k) {
    const Real t = std::pow(mu, k);
    const Section s = make_section(level, z, t);
    if (s.nodes() < minNodes || s.hull.size() < 3) break;

    CascadeLevel lv;
    lv.k = k;
    lv.nodes = s.nodes();
    const NormalizationResult norm = normalize_polygon(s.hull, 360);
    lv.A = norm.map.matrix / std::sqrt(std::abs(norm.map.det()));
    std::vector<Vec2> image;
    for (const auto& p : s.hull) image.push_back(std::pow(mu, -0.5 * k) * lv.A * (p - zbar));
    Real rmin = kInf, rmax = 0;
    for (int d = 0; d < 360; ++d) {
      const Real ang = 2 * EIGEN_PI * d / 360;
      rmin = std::min(rmin, ray_reach(image, Vec2::Zero(), Vec2(std::cos(ang), std::sin(ang))));
    }
    for (const auto& p : image) rmax = std::max(rmax, p.norm());
    lv.delta = std::max(1 - rmin / std::sqrt(2.0), rmax / std::sqrt(2.0) - 1);

    ScalarField h;
    try {
      const ConvexPotential w = solve_monge_ampere_on(potential.domain, s.mask, unit, potential.field);
      const LinearizedOperator op = assemble(cofactor(w), *potential.domain, s.mask);
      h = solve_dirichlet({&op, ScalarField(g, 0.0), u});
      lv.a = h[z];
      lv.b = grid_gradient(h, op.closure(), z);
    } catch (const Error& e) {
      throw Error(ErrorCode::ComparisonSolveFailed, "level " + std::to_string(k) + ": " + e.what());
    }

    for (int n = 0; n < g.size(); ++n)
      if (s.mask[n]) lv.error = std::max(lv.error, std::abs(u[n] - aPrev - bPrev.dot(g.point(n) - zbar)));
    lv.drift = std::abs(lv.a - aPrev) + std::pow(mu, 0.5 * k) * (lv.A.inverse().transpose() * (lv.b - bPrev)).norm();
    lv.driftBound = 2 * std::pow(mu, 0.5 * (k - 1) * (1 + alpha));
    c.cEmp = std::max(c.cEmp, lv.drift / lv.driftBound);
    aPrev = lv.a;
    bPrev = lv.b;
    c.levels.push_back(lv);
  }
  c.terminal = static_cast<int>(c.levels.size());

  std::vector<Real> ks, ys;
  Real scale = 0;
  for (const auto& lv : c.levels) scale = std::max(scale, lv.error);
  for (const auto& lv : c.levels)
    if (lv.error > 1e-12 * std::max(1.0, scale)) {
      ks.push_back(lv.k);
      ys.push_back(std::log(lv.error) / std::log(mu));
    }
  c.degenerate = ks.size() < 2;
  if (!c.degenerate) c.rate = fit_slope(ks, ys);

  std::vector<Real> inc;
  for (std::size_t k = 1; k < c.levels.size(); ++k) inc.push_back(std::abs(c.levels[k].a - c.levels[k - 1].a));
  for (Real v : inc) c.driftSum += v;
  c.driftConverges = inc.size() >= 2;
  for (std::size_t k = 1; k < inc.size(); ++k)
    if (inc[k] > 1e-13 && inc[k] > 0.9 * inc[k - 1]) c.driftConverges = false;
  return c;
}

// ---- comparison ---------------------------------------------------------------

Real cofactor_distance(const CofactorField& a, const CofactorField& b, const NodeMask& mask, Real q) {
  ScalarField d(a.grid, 0.0);
  for (int k = 0; k < a.grid.size(); ++k)
    if (mask[k]) d[k] = (a.at(k) - b.at(k)).norm();
  return lp_norm(d, mask, q);
}

ComparisonOutcome comparison_estimate(const ComparisonInput& in) {
  check_q(in.q);
  if (!(in.alpha1 > in.alpha2 && in.alpha2 > 0 && in.alpha1 < 1))
    throw Error(ErrorCode::InvalidArgument, "comparison needs 0 < alpha2 < alpha1 < 1");
  const ConvexPotential& phi = *in.phi;
  const Grid& g = phi.grid();
  const NodeMask u1 = sublevel_region(phi, in.alpha1);
  const NodeMask u2 = sublevel_region(phi, in.alpha2);
  const CofactorField cp = cofactor(phi), cw = cofactor(*in.w);
  const LinearizedOperator op = assemble(cw, *phi.domain, u1);
  const ScalarField h = solve_dirichlet({&op, ScalarField(g, 0.0), in.u});

  ComparisonOutcome o;
  ScalarField defect(g, 0.0);
  for (int k = 0; k < g.size(); ++k) {
    if (!u2[k]) continue;
    o.solutionGap = std::max(o.solutionGap, std::abs(in.u[k] - h[k]));
    if (!phi.domain->interior()[k]) continue;
    const Mat2 diff = cp.at(k) - cw.at(k);
    defect[k] = in.f[k] - (diff.cwiseProduct(central_hessian(h, k))).sum();
  }
  o.forcingDefect = lp_norm(defect, u2, in.q);
  o.cofactorDistance = cofactor_distance(cp, cw, u1, in.q);
  o.cofactorHalfBall =
      cofactor_distance(cp, cw, ball_mask(g, phi.support, phi.domain->centroid(), 0.5), in.q);
  o.fNorm = lp_norm(in.f, phi.support, in.q);
  o.lhs = o.solutionGap + o.forcingDefect;
  o.rhs = std::pow(o.cofactorDistance, in.gamma) + o.fNorm;
  o.cEmp = empirical_ratio(o.lhs, o.rhs);
  const Real n = kDim;
  o.sideCondition = o.cofactorDistance <= std::pow(in.alpha1 - in.alpha2, 2 * n / (1 + (n - 1) * in.gamma));
  return o;
}

// ---- boundary estimates --------------------------------------------------------

EstimateReport pointwise_c1alpha_boundary(const ConvexPotential& potential, const ScalarField& u,
                                          const ScalarField& f, const BoundaryData& bc, int origin,
                                          const BoundaryC1AlphaSpec& spec) {
  check_q(spec.q);
  exponents::require_alpha(spec.alpha);
  const Grid& g = potential.grid();
  const ConvexDomain& dom = *potential.domain;
  const Vec2 x0 = g.point(origin);
  const auto level = std::make_shared<const ScalarField>(section_level(potential, origin));

  std::vector<Real> ladder = spec.heights;
  if (ladder.empty()) ladder = height_ladder(ladder_floor(g), spec.theta * spec.theta);
  std::vector<Section> sections;
  for (Real t : ladder) {
    Section s = make_section(level, origin, t);
    if (s.nodes() >= 25 && s.hull.size() >= 3) sections.push_back(std::move(s));
  }
  if (sections.empty()) throw Error(ErrorCode::InsufficientLadder, "no resolvable boundary section");

  // b from u - u(0) ~ b.x on the smallest resolvable section
  Mat2 ata = Mat2::Zero();
  Vec2 atb = Vec2::Zero();
  for (int k = 0; k < g.size(); ++k)
    if (sections.front().mask[k]) {
      const Vec2 d = g.point(k) - x0;
      ata += d * d.transpose();
      atb += d * (u[k] - u[origin]);
    }
  const Vec2 b = ata.ldlt().solve(atb);

  // Enclosing ellipse of the section doubled across the flat boundary
  Real geometry = 1;
  for (const auto& s : sections) {
    std::vector<Vec2> pts = s.hull;
    for (const auto& p : s.hull) pts.emplace_back(p.x(), 2 * x0.y() - p.y());
    const Ellipse e = min_volume_ellipse(pts);
    Real k = kInf;
    for (int d = 1; d < 36; ++d) {
      const Real ang = EIGEN_PI * d / 36;
      const Vec2 dir(std::cos(ang), std::sin(ang));
      const Real inS = ray_reach(s.hull, x0, dir);
      const Real inE = std::min(ellipse_reach(e, x0, dir), ray_reach(dom.vertices(), x0, dir));
      if (inE > 0) k = std::min(k, inS / inE);
    }
    geometry = std::max(geometry, k > 0 ? 1 / k : kInf);
  }
  if (geometry > 10)
    throw Error(ErrorCode::GeometryCheckFailed, "section and ellipse inclusions fail at factor " + std::to_string(geometry));

  const NodeMask local = ball_mask(g, dom.mask(), x0, spec.rho);
  std::vector<int> bnodes;
  for (int k : nodes_of(local))
    if (dom.is_boundary_node(k)) bnodes.push_back(k);
  const Real bcNorm = bc.value ? c1gamma_norm(bc.value, bc.gradient, g, bnodes, spec.gamma) : 0.0;
  const Real uNorm = sup_norm(u, local);

  NFunctionalSpec ns;
  ns.alpha = spec.alpha;
  ns.q = spec.q;
  ns.r0 = 2 * spec.theta;
  std::vector<Real> nAt;
  for (Real t : ladder) nAt.push_back(n_functional(potential, f, ns, origin, 2 * t / spec.theta));

  EstimateReport r;
  r.suite = "c1alpha-boundary";
  for (const auto& s : sections) {
    Real err = 0;
    for (int k = 0; k < g.size(); ++k)
      if (s.mask[k]) err = std::max(err, std::abs(u[k] - u[origin] - b.dot(g.point(k) - x0)));
    Real nsup = 0;
    for (std::size_t i = 0; i < ladder.size(); ++i)
      if (ladder[i] >= s.height) nsup = std::max(nsup, nAt[i]);
    TrialRow row;
    row.trial = "hbar=" + std::to_string(s.height);
    row.q = spec.q;
    row.alpha = spec.alpha;
    row.lhs = std::pow(s.height, -0.5 * (1 + spec.alpha)) * err + b.norm();
    row.rhs = uNorm + bcNorm + nsup;
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    r.add(row);
  }
  r.metric("b1", b.x());
  r.metric("b2", b.y());
  r.metric("geometry_factor", geometry);
  r.pass = std::isfinite(r.cEmp);
  return r;
}

EstimateReport boundary_holder_gradient(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f,
                                        int origin, const std::vector<Real>& sLadder, Real alpha0) {
  const Grid& g = potential.grid();
  const Vec2 x0 = g.point(origin);
  const int up = g.nx;
  const Real dnu = (-3 * u[origin] + 4 * u[origin + up] - u[origin + 2 * up]) / (2 * g.spacing);
  const auto level = std::make_shared<const ScalarField>(section_level(potential, origin));

  EstimateReport r;
  r.suite = "boundary-gradient";
  std::vector<Real> ls, lm;
  std::vector<std::pair<Real, Real>> rows;
  Real peak = 0;
  for (Real s : sLadder) {
    const Section sec = make_section(level, origin, s);
    if (sec.nodes() == 0) continue;
    Real m = 0;
    for (int k = 0; k < g.size(); ++k)
      if (sec.mask[k]) m = std::max(m, std::abs(u[k] - u[origin] - dnu * (g.point(k).y() - x0.y())));
    rows.emplace_back(s, m);
    peak = std::max(peak, m);
  }
  if (rows.empty()) throw Error(ErrorCode::InsufficientLadder, "no nonempty boundary section");
  const Section top = make_section(level, origin, rows.back().first);
  const Real rhs = sup_norm(u, top.mask) + sup_norm(f, top.mask);
  for (const auto& [s, m] : rows) {
    if (m > 1e-13 * std::max(1.0, peak)) {
      ls.push_back(std::log(s));
      lm.push_back(std::log(m));
    }
    TrialRow row;
    row.trial = "s=" + std::to_string(s);
    row.alpha = alpha0;
    row.lhs = std::abs(dnu) + std::pow(s, -0.5 * (1 + alpha0)) * m;
    row.rhs = rhs;
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    r.add(row);
  }
  const bool degenerate = ls.size() < 2;
  r.metric("dnu", dnu);
  r.metric("alpha0_emp", degenerate ? kUnset : 2 * fit_slope(ls, lm) - 1);
  r.metric("degenerate", degenerate ? 1 : 0);
  r.pass = std::isfinite(r.cEmp);
  return r;
}

Real barrier_slope(Real delta, Real lambda, Real Lambda, int n) {
  return std::pow(2.0, n - 1) * std::pow(Lambda, n) / (std::pow(lambda, n - 1) * std::pow(delta, 3 * n - 3));
}

BarrierReport build_barrier(const ConvexPotential& potential, Real delta, Real tolerance) {
  const ConvexDomain& dom = *potential.domain;
  const Grid& g = potential.grid();
  const auto& v = dom.vertices();
  const Real scale = dom.circumradius();
  bool flat = false;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k].y() < -1e-12 * scale) throw Error(ErrorCode::GeometryUnsupported, "domain leaves the half plane x_n >= 0");
    const Vec2& a = v[k];
    const Vec2& b = v[(k + 1) % v.size()];
    if (std::abs(a.y()) <= 1e-12 * scale && std::abs(b.y()) <= 1e-12 * scale && std::min(a.x(), b.x()) < 0 &&
        std::max(a.x(), b.x()) > 0)
      flat = true;
  }
  if (!flat) throw Error(ErrorCode::GeometryUnsupported, "no flat boundary piece through the origin");
  const Vec2 s = -g.origin / g.spacing;
  const int i0 = static_cast<int>(std::lround(s.x())), j0 = static_cast<int>(std::lround(s.y()));
  if (!g.contains(i0, j0) || g.point(i0, j0).norm() > 1e-9 * scale)
    throw Error(ErrorCode::GeometryUnsupported, "origin is not a lattice node");
  const int o = g.index(i0, j0);

  const Real lambda = potential.lambda, Lambda = potential.Lambda;
  const int n = kDim;
  BarrierReport rep;
  Barrier& bar = rep.barrier;
  bar.delta = delta;
  bar.deltaTilde = 0.5 * delta * delta * delta;
  bar.M = barrier_slope(delta, lambda, Lambda, n);
  bar.K = std::pow(Lambda, n) / std::pow(lambda * bar.deltaTilde, n - 1);

  const Real phi0 = potential.analytic ? potential.analytic->value(Vec2::Zero()) : potential.field[o];
  const Vec2 grad0 = potential.analytic ? potential.analytic->gradient(Vec2::Zero()) : potential.gradient(o);
  bar.w = ScalarField(g, 0.0);
  for (int k = 0; k < g.size(); ++k) {
    if (!potential.support[k]) continue;
    const Vec2 x = g.point(k);
    const Real phi = potential.field[k] - phi0 - grad0.dot(x);
    bar.w[k] = bar.M * x.y() + phi - bar.deltaTilde * x.x() * x.x() - bar.K * x.y() * x.y();
  }

  const CofactorField cof = cofactor(potential);
  const HessianField hess = hessian(potential);
  const Mat2 shift = Vec2(-2 * bar.deltaTilde, -2 * bar.K).asDiagonal();
  const NodeMask inner = potential.inner();
  rep.margin = -kInf;
  Real symErr = 0;
  // all terms are quadratic only for quadratic potentials
  const bool quadratic = potential.analytic && (potential.analytic->kind == PotentialKind::IsotropicQuadratic ||
                                                potential.analytic->kind == PotentialKind::GeneralQuadratic);
  for (int k = 0; k < g.size(); ++k) {
    if (!inner[k]) continue;
    const Mat2 c = cof.at(k);
    const Real grid = c.cwiseProduct(hess.at(k) + shift).sum();
    rep.margin = std::max(rep.margin, grid + n * Lambda);
    if (quadratic) {
      const Mat2 exact = potential.analytic->hessian(g.point(k));
      symErr = std::max(symErr, std::abs(grid - cofactor_matrix(exact).cwiseProduct(exact + shift).sum()));
    }
  }
  if (quadratic) rep.symbolicError = symErr;

  rep.minOnBoundary = kInf;
  rep.minOnSphere = kInf;
  for (int k = 0; k < g.size(); ++k) {
    if (!dom.mask()[k]) continue;
    const Real r = g.point(k).norm();
    if (r < delta && dom.is_boundary_node(k)) rep.minOnBoundary = std::min(rep.minOnBoundary, bar.w[k]);
    if (std::abs(r - delta) <= 0.5 * g.spacing)
      rep.minOnSphere = std::min(rep.minOnSphere, bar.w[k] - 0.5 * delta * delta * delta);
  }
  rep.pass = rep.margin <= tolerance * n * Lambda && rep.minOnBoundary >= -1e-8 && rep.minOnSphere >= -1e-8;
  return rep;
}

// ---- global estimates ----------------------------------------------------------

EstimateReport strong_type_report(const ConvexPotential& potential, const std::vector<ScalarField>& family, Real p) {
  if (!(p > 1)) throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: strong type needs p > 1");
  const std::vector<MaximalField> mf = maximal_function(potential, family);
  EstimateReport r;
  r.suite = "strong-type";
  for (std::size_t k = 0; k < family.size(); ++k) {
    TrialRow row;
    row.trial = "f" + std::to_string(k);
    row.mesh = potential.grid().nx - 1;
    row.p = p;
    row.lhs = lp_norm(mf[k].values, potential.support, p);
    row.rhs = lp_norm(family[k], potential.support, p);
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    r.add(row);
  }
  r.pass = std::isfinite(r.cEmp);
  return r;
}

EstimateReport global_w1p_report(const ConvexPotential& potential, const std::vector<NamedSampler>& family,
                                 const W1pSpec& spec, const BoundaryData& bc) {
  exponents::require_q(spec.q);
  for (Real p : spec.ps) exponents::require_p(p, spec.q);
  const Real qp = spec.qprime > 0 ? spec.qprime : exponents::default_qprime(spec.q);
  if (!(qp > 0.5 * kDim && qp < spec.q))
    throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need n/2 < q' < q");

  const Grid& g = potential.grid();
  const ConvexDomain& dom = *potential.domain;
  const NodeMask& mask = dom.mask();
  const LinearizedOperator op = assemble(cofactor(potential), dom);
  const OperatorFactorization factor(op);
  const ScalarField boundary = sampled(g, bc.value);
  std::vector<int> bnodes;
  for (int k = 0; k < g.size(); ++k)
    if (dom.is_boundary_node(k)) bnodes.push_back(k);
  const Real bcNorm = bc.value ? c1gamma_norm(bc.value, bc.gradient, g, bnodes, spec.gamma) : 0.0;

  std::vector<int> probes;
  NodeMask probeMask(g.size(), 0);
  const int stride = std::max(1, spec.diagnosticStride);
  for (int k = 0; k < g.size(); ++k)
    if (dom.interior()[k] && g.col(k) % stride == 0 && g.row(k) % stride == 0) {
      probes.push_back(k);
      probeMask[k] = 1;
    }

  EstimateReport r;
  r.suite = "w1p";
  for (const auto& member : family) {
    const ScalarField f = sampled(g, member.f);
    const ScalarField u = solve_dirichlet({&op, f, boundary}, factor);
    const Real fq = lp_norm(f, mask, spec.q);
    const Real uInf = sup_norm(u, mask);
    r.metric("f_norm_q:" + member.id, fq);
    r.metric("f_norm_q_plus:" + member.id, lp_norm(f, mask, spec.q + 0.25));
    for (Real p : spec.ps) {
      TrialRow row;
      row.trial = member.id;
      row.potential = potential.analytic ? std::string(to_string(potential.analytic->kind)) : "solved";
      row.mesh = g.nx - 1;
      row.q = spec.q;
      row.qprime = qp;
      row.p = p;
      row.alpha = exponents::default_alpha(spec.q, p);
      row.lhs = w1p_norm(u, mask, p);
      row.rhs = bcNorm + fq;
      row.cEmp = empirical_ratio(row.lhs, row.rhs);
      r.add(row);

      if (probes.empty()) continue;
      NFunctionalSpec ns;
      ns.alpha = row.alpha;
      ns.q = qp;
      ns.r0 = 1;
      const std::vector<Real> nv = n_functional_field(potential, f, ns, probes);
      ScalarField nf(g, 0.0);
      Real gradRatio = 0;
      for (std::size_t i = 0; i < probes.size(); ++i) {
        nf[probes[i]] = nv[i];
        gradRatio = std::max(gradRatio, grid_gradient(u, mask, probes[i]).norm() / (uInf + nv[i]));
      }
      const std::string key = member.id + ":p=" + std::to_string(p);
      r.metric("gradient_ratio:" + key, gradRatio);
      // each probe stands for stride^2 cells
      r.metric("n_ratio_p:" + key,
               std::pow(stride * stride, 1 / p) * lp_norm(nf, probeMask, p) / std::max(fq, 1e-300));
    }
  }
  r.pass = std::isfinite(r.cEmp);
  return r;
}

EstimateReport global_holder_report(const ConvexPotential& potential, const ScalarField& u, const ScalarField& f,
                                    const BoundaryData& bc, Real q, Real alpha, std::mt19937_64& rng, int pairs) {
  check_q(q);
  const Grid& g = potential.grid();
  const ConvexDomain& dom = *potential.domain;
  const std::vector<int> nodes = nodes_of(dom.mask());
  std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
  std::vector<Real> dist, diff;
  for (int k = 0; k < pairs; ++k) {
    const int a = nodes[pick(rng)], b = nodes[pick(rng)];
    if (a == b) continue;
    dist.push_back((g.point(a) - g.point(b)).norm());
    diff.push_back(std::abs(u[a] - u[b]));
  }

  // Upper envelope per log-distance bin
  constexpr int kBins = 12;
  const auto [dlo, dhi] = std::minmax_element(dist.begin(), dist.end());
  const Real l0 = std::log(*dlo), l1 = std::log(*dhi) + 1e-12;
  std::vector<Real> envelope(kBins, 0), centers(kBins);
  for (int b = 0; b < kBins; ++b) centers[b] = l0 + (b + 0.5) * (l1 - l0) / kBins;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const int b = std::min(kBins - 1, static_cast<int>((std::log(dist[k]) - l0) / (l1 - l0) * kBins));
    envelope[b] = std::max(envelope[b], diff[k]);
  }
  std::vector<Real> lx, ly;
  for (int b = 0; b < kBins; ++b)
    if (envelope[b] > 0) {
      lx.push_back(centers[b]);
      ly.push_back(std::log(envelope[b]));
    }
  const Real betaEmp = lx.size() >= 2 ? std::clamp(fit_slope(lx, ly), 1e-3, 1.0) : 1.0;
  const Real betaBoundary = exponents::boundary_holder_exponent(exponents::boundary_alpha(alpha, q));

  // C^alpha norm of the boundary data over boundary nodes
  std::vector<int> bnodes;
  for (int k : nodes)
    if (dom.is_boundary_node(k)) bnodes.push_back(k);
  Real bcNorm = 0;
  if (bc.value) {
    Real sup = 0, semi = 0;
    std::vector<Real> vals;
    for (int k : bnodes) {
      vals.push_back(bc.value(g.point(k)));
      sup = std::max(sup, std::abs(vals.back()));
    }
    for (std::size_t a = 0; a < bnodes.size(); ++a)
      for (std::size_t b = a + 1; b < bnodes.size(); ++b)
        semi = std::max(semi, std::abs(vals[a] - vals[b]) /
                                  std::pow((g.point(bnodes[a]) - g.point(bnodes[b])).norm(), alpha));
    bcNorm = sup + semi;
  }
  const Real rhs = sup_norm(u, dom.mask()) + bcNorm + lp_norm(f, dom.mask(), q);

  EstimateReport r;
  r.suite = "holder";
  for (const auto& [name, beta] : {std::pair<std::string, Real>{"beta_emp", betaEmp}, {"beta_boundary", betaBoundary}}) {
    Real quotient = 0;
    for (std::size_t k = 0; k < dist.size(); ++k) quotient = std::max(quotient, diff[k] / std::pow(dist[k], beta));
    TrialRow row;
    row.trial = name;
    row.mesh = g.nx - 1;
    row.q = q;
    row.alpha = beta;
    row.lhs = quotient;
    row.rhs = rhs;
    row.cEmp = empirical_ratio(quotient, rhs);
    r.add(row);
    r.metric(name == "beta_emp" ? "c_beta" : "c_boundary", row.cEmp);
  }
  r.metric("beta_emp", betaEmp);
  r.metric("beta_boundary", betaBoundary);
  r.pass = std::isfinite(r.cEmp);
  return r;
}

// ---- Green function and identities --------------------------------------------

GreenOracleCheck green_oracle_check(const LinearizedOperator& op, std::mt19937_64& rng, int pairs) {
  const Eigen::MatrixXd dense = Eigen::MatrixXd(op.interior).inverse() / op.grid.cell_area();
  const OperatorFactorization factor(op);
  GreenOracleCheck out;
  const Real peak = dense.cwiseAbs().maxCoeff();
  Eigen::MatrixXd sparse(op.unknowns(), op.unknowns());
  for (int c = 0; c < op.unknowns(); ++c) {
    const GreenField gf = green_function(factor, op.nodes[c]);
    for (int r = 0; r < op.unknowns(); ++r) sparse(r, c) = gf.values[op.nodes[r]];
    const Real scale = dense.col(c).cwiseAbs().maxCoeff();
    out.maxRelativeError = std::max(out.maxRelativeError, (sparse.col(c) - dense.col(c)).cwiseAbs().maxCoeff() / scale);
    ++out.columns;
  }
  std::uniform_int_distribution<int> pick(0, op.unknowns() - 1);
  for (int k = 0; k < pairs; ++k) {
    const int a = pick(rng), b = pick(rng);
    out.maxSymmetryError = std::max(out.maxSymmetryError, std::abs(sparse(a, b) - sparse(b, a)) / peak);
  }
  return out;
}

EstimateReport green_integrability_report(const std::vector<NamedPotential>& family, Real q,
                                          const std::vector<Real>& fractions) {
  check_q(q);
  EstimateReport r;
  r.suite = "green";
  std::vector<Real> ratios;
  for (const auto& member : family) {
    const ConvexPotential& p = *member.potential;
    const int z = p.argmin();
    const Real top = maximal_interior_height(p, z);
    const auto level = std::make_shared<const ScalarField>(section_level(p, z));
    const CofactorField cof = cofactor(p);
    for (Real c : fractions) {
      const Section s = make_section(level, z, c * top);
      const LinearizedOperator op = assemble(cof, *p.domain, s.mask);
      const GreenBound b = green_lq_bound(green_function(op, z), q);
      TrialRow row;
      row.trial = "V=" + std::to_string(c);
      row.potential = member.id;
      row.mesh = p.grid().nx - 1;
      row.q = q;
      row.lhs = b.norm;
      row.rhs = std::pow(b.volume, exponents::volume_exponent(q));
      row.cEmp = b.ratio;
      ratios.push_back(b.ratio);
      r.add(row);
    }
  }
  r.spread = malab::spread(ratios);
  r.pass = std::all_of(ratios.begin(), ratios.end(), [](Real v) { return std::isfinite(v); }) &&
           r.spread <= r.tolerance;
  return r;
}

EstimateReport identity_report(const AnalyticPotential& phi, const std::vector<int>& meshes) {
  EstimateReport r;
  r.suite = "ma-identity";
  std::vector<Real> hs, identity, divergence;
  for (int cells : meshes) {
    const auto dom = std::make_shared<const ConvexDomain>(ConvexDomain::disk(Vec2::Zero(), 1, cells));
    const ConvexPotential p = analytic_potential(phi, dom);
    const Real h = p.grid().spacing;
    NodeMask checked;
    const ScalarField div = divergence_defect(cofactor(p), &checked);
    hs.push_back(h);
    identity.push_back(ma_identity_residual(p));
    divergence.push_back(sup_norm(div, checked));
    for (const auto& [name, value] : {std::pair<std::string, Real>{"identity", identity.back()},
                                      {"divergence", divergence.back()}}) {
      TrialRow row;
      row.trial = name;
      row.potential = std::string(to_string(phi.kind));
      row.mesh = cells;
      row.lhs = value;
      row.rhs = h * h;
      row.cEmp = empirical_ratio(value, h * h);
      r.add(row);
    }
  }
  auto order = [&](const std::vector<Real>& err) {
    return hs.size() >= 2 && *std::max_element(err.begin(), err.end()) > 1e-12 ? fit_order(hs, err) : kUnset;
  };
  r.metric("order_identity", order(identity));
  r.metric("order_divergence", order(divergence));
  r.metric("max_identity", *std::max_element(identity.begin(), identity.end()));
  r.metric("max_divergence", *std::max_element(divergence.begin(), divergence.end()));
  const auto ok = [](std::optional<Real> order, std::optional<Real> peak, Real exact) {
    return *peak <= exact || (order && *order >= 1.8);
  };
  r.pass = ok(r.find("order_identity"), r.find("max_identity"), 1e-10) &&
           ok(r.find("order_divergence"), r.find("max_divergence"), 1e-12);
  return r;
}

// ---- affine invariance --------------------------------------------------------

EstimateReport affine_invariance_report(const AnalyticPotential& phi, const ConvexDomain& domain, const Mat2& A,
                                        int cells, const std::vector<InvarianceSample>& samples, const Sampler& f,
                                        const NFunctionalSpec& spec) {
  const Affine map = Affine::linear(A);
  if (!map.unimodular(1e-10)) throw Error(ErrorCode::InvalidArgument, "affine invariance needs |det A| = 1");
  const auto omega = std::make_shared<const ConvexDomain>(ConvexDomain::make(domain.vertices(), cells));
  const auto image = std::make_shared<const ConvexDomain>(domain.transformed(map.inverse(), cells));
  const ConvexPotential p = analytic_potential(phi, omega);
  const ConvexPotential q = analytic_potential(phi.composed(map), image);
  const ScalarField fp = ScalarField::sample(p.grid(), f);
  const ScalarField fq = ScalarField::sample(q.grid(), [&](const Vec2& y) { return f(A * y); });
  const Affine back = map.inverse();

  auto rel = [](Real a, Real b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
  EstimateReport r;
  r.suite = "geometry";
  Real volDev = 0, nDev = 0, thetaDev = 0;
  int n = 0;
  for (const auto& s : samples) {
    const int xp = nearest_node(p, s.x), xq = nearest_node(q, back(s.x));
    const Real vp = section_at(p, xp, s.t).volume, vq = section_at(q, xq, s.t).volume;
    const Real np = n_functional(p, fp, spec, xp, s.t), nq = n_functional(q, fq, spec, xq, s.t);
    const Real tp = engulfing_constant(p, {{xp, s.t, nearest_node(p, s.y)}});
    const Real tq = engulfing_constant(q, {{xq, s.t, nearest_node(q, back(s.y))}});
    volDev = std::max(volDev, rel(vp, vq));
    nDev = std::max(nDev, rel(np, nq));
    thetaDev = std::max(thetaDev, rel(tp, tq));
    TrialRow row;
    row.trial = "sample-" + std::to_string(n++);
    row.potential = std::string(to_string(phi.kind));
    row.mesh = cells;
    row.q = spec.q;
    row.alpha = spec.alpha;
    row.lhs = vq;
    row.rhs = vp;
    row.cEmp = empirical_ratio(vq, vp);
    r.add(row);
  }
  r.metric("volume_dev", volDev);
  r.metric("n_dev", nDev);
  r.metric("theta_dev", thetaDev);
  r.pass = volDev <= 0.02 && nDev <= 0.05 && thetaDev <= 0.05;
  return r;
}

}  // namespace malab
