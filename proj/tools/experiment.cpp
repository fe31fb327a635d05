#include "experiment.hpp"

#include "malab/exponents.hpp"
#include "malab/field_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

namespace malab::cli {

// ---- config text ---------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

Real to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const Real r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "key '" + key + "' expects a number, got '" + v + "'");
  }
}

// Every accepted key; anything else in a config file is an error.
const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "domain.kind",      "domain.center",      "domain.radius",     "domain.lo",         "domain.hi",
      "domain.vertices",  "potential.family",   "potential.analytic", "potential.solve",  "potential.det_amplitude",
      "rhs.kind",         "rhs.value",          "rhs.singular",      "rhs.center",        "exponents.q",
      "exponents.qprime", "exponents.p",        "exponents.alpha",   "exponents.gamma",   "run.meshes",
      "run.suites",       "run.theta",          "run.delta",         "run.mu",            "run.levels",
      "run.seed",         "run.out"};
  return keys;
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line, section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ParseError, "line " + std::to_string(number) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(number) + ": expected key = value");
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(number) + ": unknown key '" + key + "'");
    if (c.values_.count(key)) throw Error(ErrorCode::ParseError, "duplicate key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config " + path);
  return parse(in);
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

Real Config::real(const std::string& key, Real fallback) const {
  return has(key) ? to_real(key, values_.at(key)) : fallback;
}

int Config::integer(const std::string& key, int fallback) const {
  const Real v = real(key, fallback);
  if (v != std::floor(v)) throw Error(ErrorCode::ParseError, "key '" + key + "' expects an integer");
  return static_cast<int>(v);
}

std::vector<Real> Config::reals(const std::string& key, const std::vector<Real>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<Real> out;
  for (const auto& w : split(values_.at(key), ',')) out.push_back(to_real(key, w));
  return out;
}

std::vector<std::string> Config::words(const std::string& key, const std::vector<std::string>& fallback) const {
  return has(key) ? split(values_.at(key), ',') : fallback;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- typed config --------------------------------------------------------------

namespace {

Vec2 to_point(const std::string& key, const std::vector<Real>& v) {
  if (v.size() != 2) throw Error(ErrorCode::ParseError, "key '" + key + "' expects two coordinates");
  return {v[0], v[1]};
}

}  // namespace

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig e;
  const std::string kind = c.text("domain.kind", "disk");
  if (kind == "disk") e.domain = DomainKind::Disk;
  else if (kind == "halfdisk") e.domain = DomainKind::HalfDisk;
  else if (kind == "box") e.domain = DomainKind::Box;
  else if (kind == "polygon") e.domain = DomainKind::Polygon;
  else throw Error(ErrorCode::ParseError, "unknown domain kind '" + kind + "'");
  e.center = to_point("domain.center", c.reals("domain.center", {0, 0}));
  e.radius = c.real("domain.radius", 1);
  e.lo = to_point("domain.lo", c.reals("domain.lo", {-1, -1}));
  e.hi = to_point("domain.hi", c.reals("domain.hi", {1, 1}));
  for (const auto& v : split(c.text("domain.vertices", ""), ';'))
    e.vertices.push_back(to_point("domain.vertices", [&] {
      std::vector<Real> xy;
      for (const auto& w : split(v, ',')) xy.push_back(to_real("domain.vertices", w));
      return xy;
    }()));
  if (e.domain == DomainKind::Polygon && e.vertices.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "polygon domain needs at least three vertices");
  if (!(e.radius > 0)) throw Error(ErrorCode::InvalidArgument, "domain radius must be positive");

  e.potentialFamily = c.text("potential.family", "pinched");
  if (e.potentialFamily != "pinched" && e.potentialFamily != "single")
    throw Error(ErrorCode::ParseError, "potential.family must be 'pinched' or 'single'");
  e.analytic = AnalyticPotential::parse(c.text("potential.analytic", "isotropicQuadratic"));
  const std::string solve = c.text("potential.solve", "false");
  if (solve != "true" && solve != "false") throw Error(ErrorCode::ParseError, "potential.solve must be true or false");
  e.solvePotential = solve == "true";
  e.detAmplitude = c.real("potential.det_amplitude", 0.3);

  e.rhsKind = c.text("rhs.kind", "constant");
  if (e.rhsKind != "constant" && e.rhsKind != "singular" && e.rhsKind != "random" && e.rhsKind != "zero")
    throw Error(ErrorCode::ParseError, "unknown rhs kind '" + e.rhsKind + "'");
  e.rhsValue = c.real("rhs.value", 1);
  e.singular = c.reals("rhs.singular", {});
  e.rhsCenter = to_point("rhs.center", c.reals("rhs.center", {0, 0}));

  e.q = c.real("exponents.q", 2);
  e.qprime = c.real("exponents.qprime", 0);
  e.ps = c.reals("exponents.p", e.ps);
  e.alpha = c.real("exponents.alpha", 0.3);
  e.gamma = c.real("exponents.gamma", 0.5);

  e.meshes.clear();
  for (Real m : c.reals("run.meshes", {64})) {
    if (m != std::floor(m) || m < 4) throw Error(ErrorCode::InvalidArgument, "meshes are integer cell counts >= 4");
    e.meshes.push_back(static_cast<int>(m));
  }
  if (e.meshes.empty()) throw Error(ErrorCode::InvalidArgument, "run.meshes is empty");
  e.suites = c.words("run.suites", {});
  e.theta = c.reals("run.theta", e.theta);
  e.deltas = c.reals("run.delta", e.deltas);
  e.mu = c.real("run.mu", 0.25);
  e.levels = c.integer("run.levels", 8);
  if (c.has("run.seed")) {
    const Real s = c.real("run.seed", 0);
    if (s < 0 || s != std::floor(s)) throw Error(ErrorCode::ParseError, "run.seed must be a non-negative integer");
    e.seed = static_cast<std::uint64_t>(std::stoull(c.text("run.seed", "0")));
  }
  e.out = c.text("run.out", "out");

  // Exponent gates, before any compute
  exponents::require_q(e.q);
  for (Real p : e.ps) exponents::require_p(p, e.q);
  if (e.qprime != 0 && !(e.qprime > 0.5 * kDim && e.qprime < e.q))
    throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need n/2 < q' < q");
  exponents::require_alpha(e.alpha);
  if (!(e.gamma > 0 && e.gamma < 1)) throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: need 0 < gamma < 1");
  if (!(e.mu > 0 && e.mu < 1)) throw Error(ErrorCode::InvalidArgument, "run.mu must lie in (0, 1)");
  if (e.singular.empty())
    for (Real frac : {0.0, 0.3, 0.6, 0.825, 0.9375, 0.975, 0.99}) e.singular.push_back(frac * kDim / e.q);
  for (Real s : e.singular)
    if (!(s >= 0 && s < kDim / e.q))
      throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: singular exponents need 0 <= s < n/q");
  return e;
}

// ---- building blocks -----------------------------------------------------------

namespace {

std::vector<Vec2> upper_half_circle(const Vec2& c, Real r) {
  std::vector<Vec2> v;
  for (int k = 0; k <= 180; ++k) {
    const Real a = std::numbers::pi * k / 180;
    v.push_back(c + r * Vec2(std::cos(a), std::sin(a)));
  }
  return v;
}

DomainPtr make_domain(const ExperimentConfig& e, int cells) {
  switch (e.domain) {
    case DomainKind::Disk:
      return std::make_shared<const ConvexDomain>(ConvexDomain::disk(e.center, e.radius, cells));
    case DomainKind::HalfDisk:
      return std::make_shared<const ConvexDomain>(ConvexDomain::make(upper_half_circle(e.center, e.radius), cells));
    case DomainKind::Box:
      return std::make_shared<const ConvexDomain>(ConvexDomain::box(e.lo, e.hi, cells));
    case DomainKind::Polygon:
      return std::make_shared<const ConvexDomain>(ConvexDomain::make(e.vertices, cells));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown domain kind");
}

/// Boundary suites need a flat edge through the origin.
DomainPtr boundary_domain(const ExperimentConfig& e, int cells) {
  const Vec2 c = e.domain == DomainKind::HalfDisk ? e.center : Vec2::Zero();
  const Real r = e.domain == DomainKind::HalfDisk ? e.radius : 1.0;
  return std::make_shared<const ConvexDomain>(ConvexDomain::make(upper_half_circle(c, r), cells));
}

struct Member {
  std::string id;
  ConvexPotential potential;
};

std::vector<Member> family(const ExperimentConfig& e, DomainPtr dom, bool withSolved = true) {
  std::vector<Member> out;
  if (e.potentialFamily == "pinched") {
    for (const auto& m : pinched_family()) out.push_back({m.id, analytic_potential(m.analytic, dom)});
  } else {
    out.push_back({std::string(to_string(e.analytic.kind)), analytic_potential(e.analytic, dom)});
  }
  if (withSolved && e.solvePotential) {
    const AnalyticPotential& bd = out.front().potential.analytic.value();
    const Real amp = e.detAmplitude;
    const ScalarField g = ScalarField::sample(dom->grid(), [&](const Vec2& x) {
      return bd.det(x) * (1 + amp * std::sin(3 * x.x()) * x.y());
    });
    const ScalarField boundary = ScalarField::sample(dom->grid(), [&](const Vec2& x) { return bd.value(x); });
    out.push_back({"solved", solve_monge_ampere(dom, g, boundary)});
  }
  return out;
}

std::uint64_t suite_seed(const ExperimentConfig& e, const std::string& suite) {
  std::uint64_t h = e.seed.value_or(0) ^ 0x9e3779b97f4a7c15ull;
  for (unsigned char c : suite) h = (h ^ c) * 1099511628211ull;
  return h;
}

ScalarField rhs_field(const ExperimentConfig& e, const Grid& g, std::mt19937_64& rng) {
  if (e.rhsKind == "zero") return ScalarField(g, 0.0);
  if (e.rhsKind == "constant") return ScalarField(g, e.rhsValue);
  if (e.rhsKind == "random") return random_smooth_field(g, rng);
  return ScalarField::sample(g, singular_power(e.rhsCenter, e.singular.front(), g.spacing));
}

/// Phi^{ij} u_ij = f on the whole domain, u = boundary.
ScalarField solve_on_domain(const ConvexPotential& p, const ScalarField& f, const ScalarField& boundary) {
  const LinearizedOperator op = assemble(cofactor(p), *p.domain);
  return solve_dirichlet({&op, f, boundary});
}

int node_at_origin(const ConvexPotential& p) {
  const Grid& g = p.grid();
  const Vec2 s = -g.origin / g.spacing;
  const int i = static_cast<int>(std::lround(s.x())), j = static_cast<int>(std::lround(s.y()));
  if (!g.contains(i, j) || g.point(i, j).norm() > 1e-9)
    throw Error(ErrorCode::GeometryUnsupported, "origin is not a lattice node; use an even cell count");
  return g.index(i, j);
}

void tag(EstimateReport& r, const std::string& potential, int mesh, std::size_t from = 0) {
  for (std::size_t k = from; k < r.trials.size(); ++k) {
    r.trials[k].potential = potential;
    r.trials[k].mesh = mesh;
  }
}

/// Concatenates sub-reports; metrics are prefixed with the sub-report suite.
EstimateReport merge(const std::string& suite, const std::vector<EstimateReport>& parts) {
  EstimateReport r;
  r.suite = suite;
  r.pass = true;
  for (const auto& p : parts) {
    for (const auto& t : p.trials) r.add(t);
    r.spread = std::max(r.spread, p.spread);
    r.pass = r.pass && p.pass;
    for (const auto& [k, v] : p.metrics) r.metric(p.suite == suite ? k : p.suite + ":" + k, v);
    for (const auto& n : p.notes) r.notes.push_back(n);
  }
  return r;
}

// Short form for labels and metric keys; data columns keep full precision.
std::string label(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

const BoundaryData kZeroBoundary{"zero", [](const Vec2&) { return 0.0; }, [](const Vec2&) { return Vec2(0, 0); }};

// ---- suites --------------------------------------------------------------------

EstimateReport suite_ma_identity(const ExperimentConfig& e) {
  std::vector<EstimateReport> parts;
  std::vector<AnalyticPotential> list;
  if (e.potentialFamily == "pinched")
    for (const auto& m : pinched_family()) list.push_back(m.analytic);
  else
    list.push_back(e.analytic);
  for (const auto& a : list) {
    EstimateReport r = identity_report(a, e.meshes);
    r.suite = std::string(to_string(a.kind)) + "/" + a.descriptor();
    if (e.meshes.size() < 2) {
      r.pass = *r.find("max_identity") <= 1e-10 || !std::isfinite(*r.find("order_identity")) ||
               *r.find("order_identity") >= 1.8;
      r.notes.push_back("a single mesh gives no convergence order");
    }
    for (auto& t : r.trials) t.pass = r.pass;
    parts.push_back(r);
  }
  return merge("ma-identity", parts);
}

EstimateReport suite_max_principle(const ExperimentConfig& e) {
  std::vector<EstimateReport> parts;
  for (auto kind : {MaxPrincipleKind::Interior, MaxPrincipleKind::BoundarySection, MaxPrincipleKind::Global,
                    MaxPrincipleKind::Ball}) {
    std::vector<std::vector<Member>> members;
    std::vector<MaxPrincipleCase> cases;
    for (int cells : e.meshes) members.push_back(family(e, make_domain(e, cells)));
    std::mt19937_64 rng(suite_seed(e, "max-principle"));
    std::vector<ScalarField> fs;
    for (std::size_t m = 0; m < members.size(); ++m)
      for (auto& mem : members[m]) {
        const ConvexPotential& p = mem.potential;
        const Grid& g = p.grid();
        // Forcing of one sign so that u peaks inside
        ScalarField f = rhs_field(e, g, rng);
        f.values = -f.values.cwiseAbs();
        fs.push_back(f);
        MaxPrincipleCase c;
        c.potential = mem.id;
        c.mesh = e.meshes[m];
        c.phi = &p;
        c.f = [f](const Vec2& x) { return f.interpolate(x); };
        c.boundary = [](const Vec2&) { return 0.0; };
        Vec2 edge = p.domain->centroid();
        for (const auto& v : p.domain->vertices())
          if (v.x() > edge.x()) edge = v;
        const Real size = p.domain->inradius();
        switch (kind) {
          case MaxPrincipleKind::Interior:
            c.region = p.domain->mask();
            c.probe = sublevel_region(p, 0.5);
            break;
          case MaxPrincipleKind::BoundarySection: c.region = boundary_section_region(p, edge, 0.5 * size * size); break;
          case MaxPrincipleKind::Global: c.region = p.domain->mask(); break;
          case MaxPrincipleKind::Ball: c.region = ball_region(p, edge, 0.5 * size); break;
        }
        cases.push_back(std::move(c));
      }
    parts.push_back(verify_max_principle(kind, cases, e.q));
  }
  return merge("max-principle", parts);
}

EstimateReport suite_harnack(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "harnack"));
  std::uniform_real_distribution<Real> unit(0, 1);
  struct Data {
    Real amp, freq, phase;
    Vec2 dir;
  };
  std::vector<Data> data;
  for (int k = 0; k < 5; ++k) {
    const Real a = 2 * std::numbers::pi * unit(rng);
    data.push_back({0.5 + 2 * unit(rng), 1 + 3 * unit(rng), 2 * std::numbers::pi * unit(rng), Vec2(std::cos(a), std::sin(a))});
  }
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes) {
    const std::vector<Member> members = family(e, make_domain(e, cells));
    std::vector<HarnackCase> cases;
    for (const auto& m : members)
      for (const auto& d : data) {
        HarnackCase c;
        c.potential = m.id;
        c.mesh = cells;
        c.phi = &m.potential;
        c.center = m.potential.argmin();
        c.t = 0.5 * maximal_interior_height(m.potential, c.center);
        c.boundary = [d](const Vec2& x) { return 1 + d.amp * (1 + std::cos(d.freq * d.dir.dot(x) + d.phase)); };
        c.f = [](const Vec2&) { return 0.0; };
        cases.push_back(c);
      }
    EstimateReport r = verify_harnack(cases, e.q);
    r.suite = "harnack/" + std::to_string(cells);
    parts.push_back(r);
  }
  return merge("harnack", parts);
}

EstimateReport suite_oscillation(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "oscillation"));
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes)
    for (const auto& m : family(e, make_domain(e, cells))) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      const int x = p.argmin();
      const Real h = 0.5 * maximal_interior_height(p, x);
      EstimateReport r = oscillation_decay(p, u, f, x, h, height_ladder(4 * ladder_floor(p.grid()), h), e.q);
      tag(r, m.id, cells);
      r.suite = m.id + "/" + std::to_string(cells);
      parts.push_back(r);
    }
  return merge("oscillation", parts);
}

EstimateReport suite_c1alpha_interior(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "c1alpha-interior"));
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes)
    for (const auto& m : family(e, make_domain(e, cells))) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      InteriorC1AlphaSpec spec;
      spec.alpha = e.alpha;
      spec.q = e.q;
      spec.r0 = 0.5 * maximal_interior_height(p, p.argmin());
      spec.muStar = 0.5 * p.domain->inradius();
      spec.radii = {spec.muStar / 8, spec.muStar / 4, spec.muStar / 2, spec.muStar};
      EstimateReport r = pointwise_c1alpha_interior(p, u, f, spec);
      tag(r, m.id, cells);
      r.suite = m.id + "/" + std::to_string(cells);
      parts.push_back(r);
    }
  EstimateReport r = merge("c1alpha-interior", parts);
  r.judge_spread();
  return r;
}

EstimateReport suite_cascade(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "cascade"));
  std::vector<EstimateReport> parts;
  const Real target = 0.5 * (1 + e.alpha);
  for (int cells : e.meshes)
    for (const auto& m : family(e, make_domain(e, cells))) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      const AffineCascade c = affine_cascade(p, u, e.mu, e.alpha, e.levels);
      EstimateReport r;
      r.suite = m.id + "/" + std::to_string(cells);
      for (const auto& lv : c.levels) {
        TrialRow row;
        row.trial = "level-" + std::to_string(lv.k);
        row.potential = m.id;
        row.mesh = cells;
        row.alpha = e.alpha;
        row.lhs = lv.error;
        row.rhs = std::pow(e.mu, 0.5 * (lv.k - 1) * (1 + e.alpha));
        row.cEmp = empirical_ratio(row.lhs, row.rhs);
        r.add(row);
      }
      r.metric("levels", c.terminal);
      r.metric("rate", c.rate);
      r.metric("drift_converges", c.driftConverges ? 1 : 0);
      r.metric("drift_sum", c.driftSum);
      r.metric("drift_constant", c.cEmp);
      Real worstDelta = 0;
      for (const auto& lv : c.levels) worstDelta = std::max(worstDelta, lv.delta);
      r.metric("max_delta", worstDelta);
      r.pass = c.degenerate || (c.rate >= target && c.driftConverges);
      for (auto& t : r.trials) t.pass = r.pass;
      parts.push_back(r);
    }
  return merge("cascade", parts);
}

EstimateReport suite_comparison(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "comparison"));
  std::vector<Real> thetas = e.theta;
  std::sort(thetas.rbegin(), thetas.rend());
  EstimateReport r;
  r.suite = "comparison";
  r.pass = true;
  for (int cells : e.meshes) {
    const DomainPtr dom = make_domain(e, cells);
    std::vector<Real> half;
    for (Real theta : thetas) {
      // det of the perturbation lies in [(1 - eps pi^2)^2, (1 + eps pi^2)^2]
      const Real eps = (std::sqrt(1 + theta) - 1) / (std::numbers::pi * std::numbers::pi);
      const ConvexPotential phi = analytic_potential(AnalyticPotential::perturbed(eps), dom);
      const ConvexPotential w = solve_monge_ampere(dom, ScalarField(dom->grid(), 1.0), phi.field);
      ComparisonInput in;
      in.phi = &phi;
      in.w = &w;
      in.f = rhs_field(e, dom->grid(), rng);
      in.u = solve_on_domain(phi, in.f, ScalarField(dom->grid(), 0.0));
      in.gamma = e.gamma;
      in.q = e.q;
      const ComparisonOutcome o = comparison_estimate(in);
      TrialRow row;
      row.trial = "estimate/theta=" + label(theta);
      row.potential = "perturbedQuadratic";
      row.mesh = cells;
      row.q = e.q;
      row.alpha = e.gamma;
      row.lhs = o.lhs;
      row.rhs = o.rhs;
      row.cEmp = o.cEmp;
      row.pass = std::isfinite(o.cEmp);
      r.add(row);
      // The cofactor distance on the half ball, against theta
      TrialRow dist = row;
      dist.trial = "cofactor_distance/theta=" + label(theta);
      dist.lhs = o.cofactorHalfBall;
      dist.rhs = theta;
      dist.cEmp = empirical_ratio(dist.lhs, dist.rhs);
      r.add(dist);
      const std::string key = std::to_string(cells) + ":theta=" + label(theta);
      r.metric("cofactor_distance:" + key, o.cofactorDistance);
      r.metric("cofactor_half_ball:" + key, o.cofactorHalfBall);
      r.metric("side_condition:" + key, o.sideCondition ? 1 : 0);
      if (!o.sideCondition) r.notes.push_back("side condition violated at " + key);
      half.push_back(o.cofactorHalfBall);
    }
    for (std::size_t k = 1; k < half.size(); ++k) r.pass = r.pass && half[k] < half[k - 1];
  }
  r.pass = r.pass && std::isfinite(r.cEmp);
  return r;
}

EstimateReport suite_c1alpha_boundary(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "c1alpha-boundary"));
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes)
    for (const auto& m : family(e, boundary_domain(e, cells), false)) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      BoundaryC1AlphaSpec spec;
      spec.alpha = e.alpha;
      spec.q = e.q;
      spec.gamma = e.gamma;
      EstimateReport r = pointwise_c1alpha_boundary(p, u, f, kZeroBoundary, node_at_origin(p), spec);
      tag(r, m.id, cells);
      r.suite = m.id + "/" + std::to_string(cells);
      parts.push_back(r);
    }
  return merge("c1alpha-boundary", parts);
}

EstimateReport suite_boundary_gradient(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "boundary-gradient"));
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes)
    for (const auto& m : family(e, boundary_domain(e, cells), false)) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      EstimateReport r = boundary_holder_gradient(p, u, f, node_at_origin(p),
                                                  height_ladder(4 * ladder_floor(p.grid()), 0.25),
                                                  exponents::boundary_alpha(e.alpha, e.q));
      tag(r, m.id, cells);
      r.suite = m.id + "/" + std::to_string(cells);
      parts.push_back(r);
    }
  return merge("boundary-gradient", parts);
}

EstimateReport suite_barrier(const ExperimentConfig& e) {
  EstimateReport r;
  r.suite = "barrier";
  r.pass = true;
  Real symbolic = 0;
  for (int cells : e.meshes) {
    const DomainPtr dom = boundary_domain(e, cells);
    std::vector<Member> members = family(e, dom, false);
    {
      const AnalyticPotential base = AnalyticPotential::isotropic();
      const ScalarField g = ScalarField::sample(dom->grid(), [&](const Vec2& x) {
        return 1 + e.detAmplitude * std::sin(3 * x.x()) * x.y();
      });
      const ScalarField bd = ScalarField::sample(dom->grid(), [&](const Vec2& x) { return base.value(x); });
      members.push_back({"solved", solve_monge_ampere(dom, g, bd)});
    }
    for (const auto& m : members)
      for (Real delta : e.deltas) {
        const BarrierReport b = build_barrier(m.potential, delta);
        TrialRow row;
        row.trial = "delta=" + label(delta);
        row.potential = m.id;
        row.mesh = cells;
        row.lhs = b.margin;
        row.rhs = 1e-2 * kDim * m.potential.Lambda;
        row.cEmp = empirical_ratio(row.lhs, row.rhs);
        row.pass = b.pass;
        r.add(row);
        r.pass = r.pass && b.pass;
        if (std::isfinite(b.symbolicError)) symbolic = std::max(symbolic, b.symbolicError);
      }
  }
  std::vector<Real> ld, lm;
  for (Real d : e.deltas) {
    ld.push_back(std::log(d));
    lm.push_back(std::log(barrier_slope(d, 1, 1)));
  }
  if (ld.size() >= 2) r.metric("slope_M_delta", fit_slope(ld, lm));
  r.metric("symbolic_error", symbolic);
  return r;
}

EstimateReport suite_green(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "green"));
  EstimateReport oracle;
  oracle.suite = "oracle";
  oracle.pass = true;
  for (const auto& m : family(e, make_domain(e, 16))) {
    const LinearizedOperator op = assemble(cofactor(m.potential), *m.potential.domain);
    const GreenOracleCheck c = green_oracle_check(op, rng);
    TrialRow row;
    row.trial = "oracle";
    row.potential = m.id;
    row.mesh = 16;
    row.lhs = c.maxRelativeError;
    row.rhs = 1e-8;
    row.cEmp = empirical_ratio(row.lhs, row.rhs);
    row.pass = c.maxRelativeError <= 1e-8 && c.maxSymmetryError <= 1e-9;
    oracle.add(row);
    oracle.pass = oracle.pass && row.pass;
    oracle.metric("symmetry:" + m.id, c.maxSymmetryError);
  }
  std::vector<EstimateReport> parts{oracle};
  std::map<std::pair<std::string, std::string>, std::vector<Real>> byMesh;
  for (int cells : e.meshes) {
    const std::vector<Member> members = family(e, make_domain(e, cells));
    std::vector<NamedPotential> list;
    for (const auto& m : members) list.push_back({m.id, &m.potential});
    EstimateReport r = green_integrability_report(list, e.q);
    for (const auto& t : r.trials) byMesh[{t.potential, t.trial}].push_back(t.cEmp);
    r.suite = "integrability/" + std::to_string(cells);
    parts.push_back(r);
  }
  EstimateReport r = merge("green", parts);
  Real drift = 0;
  for (const auto& [key, v] : byMesh) drift = std::max(drift, std::abs(v.back() - v.front()) / v.front());
  r.metric("mesh_drift", drift);
  r.pass = r.pass && drift <= 0.25;
  return r;
}

EstimateReport suite_strong_type(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "strong-type"));
  EstimateReport r;
  r.suite = "strong-type";
  r.pass = true;
  for (int cells : e.meshes) {
    const std::vector<Member> members = family(e, make_domain(e, cells));
    std::vector<ScalarField> fs;
    for (int k = 0; k < 10; ++k) fs.push_back(random_smooth_field(members.front().potential.grid(), rng));
    for (Real p : e.ps) {
      std::vector<Real> cs;
      for (const auto& m : members) {
        EstimateReport part = strong_type_report(m.potential, fs, p);
        for (auto t : part.trials) {
          t.potential = m.id;
          t.mesh = cells;
          r.add(t);
        }
        cs.push_back(part.cEmp);
      }
      const Real s = spread(cs);
      r.metric("spread:" + std::to_string(cells) + ":p=" + label(p), s);
      r.spread = std::max(r.spread, s);
      r.pass = r.pass && s <= r.tolerance;
    }
  }
  r.pass = r.pass && std::isfinite(r.cEmp);
  return r;
}

EstimateReport suite_w1p(const ExperimentConfig& e) {
  EstimateReport r;
  r.suite = "w1p";
  r.pass = true;
  for (int cells : e.meshes)
    for (const auto& m : family(e, make_domain(e, cells))) {
      const Real h = m.potential.grid().spacing;
      std::vector<NamedSampler> fam;
      for (Real s : e.singular) fam.push_back({"s=" + label(s), singular_power(e.rhsCenter, s, h)});
      W1pSpec spec;
      spec.q = e.q;
      spec.qprime = e.qprime;
      spec.ps = e.ps;
      spec.gamma = e.gamma;
      spec.diagnosticStride = 16;
      EstimateReport part = global_w1p_report(m.potential, fam, spec, kZeroBoundary);
      for (Real p : e.ps) {
        Real lo = std::numeric_limits<Real>::infinity(), hi = 0;
        for (const auto& t : part.trials)
          if (t.p == p) {
            lo = std::min(lo, t.cEmp);
            hi = std::max(hi, t.cEmp);
          }
        const std::string key = m.id + ":" + std::to_string(cells) + ":p=" + label(p);
        r.metric("c_emp_factor:" + key, hi / lo);
        r.pass = r.pass && hi / lo <= 2;
      }
      Real flo = std::numeric_limits<Real>::infinity(), fhi = 0;
      for (const auto& n : fam) {
        const Real v = *part.find("f_norm_q_plus:" + n.id);
        flo = std::min(flo, v);
        fhi = std::max(fhi, v);
      }
      r.metric("f_plus_growth:" + m.id + ":" + std::to_string(cells), fhi / flo);
      for (auto t : part.trials) {
        t.potential = m.id;
        r.add(t);
      }
    }
  return r;
}

EstimateReport suite_holder(const ExperimentConfig& e) {
  std::mt19937_64 rng(suite_seed(e, "holder"));
  std::vector<EstimateReport> parts;
  for (int cells : e.meshes)
    for (const auto& m : family(e, make_domain(e, cells))) {
      const ConvexPotential& p = m.potential;
      const ScalarField f = rhs_field(e, p.grid(), rng);
      const ScalarField u = solve_on_domain(p, f, ScalarField(p.grid(), 0.0));
      EstimateReport r = global_holder_report(p, u, f, kZeroBoundary, e.q, e.alpha, rng);
      tag(r, m.id, cells);
      r.suite = m.id + "/" + std::to_string(cells);
      parts.push_back(r);
    }
  return merge("holder", parts);
}

EstimateReport suite_geometry(const ExperimentConfig& e) {
  Mat2 A;
  A << 2, 0.5, 0, 0.5;
  const DomainPtr dom = make_domain(e, e.meshes.back());
  const Vec2 c = dom->centroid();
  const Real r0 = dom->inradius();
  const std::vector<InvarianceSample> samples = {
      {c, 0.1 * r0 * r0, c + 0.1 * r0 * Vec2(1, 1)},
      {c + r0 * Vec2(0.2, -0.1), 0.05 * r0 * r0, c + r0 * Vec2(0.25, -0.05)},
      {c + r0 * Vec2(-0.3, 0.2), 0.2 * r0 * r0, c + r0 * Vec2(-0.1, 0.3)},
      {c + r0 * Vec2(0.1, 0.3), 0.08 * r0 * r0, c + r0 * Vec2(0.1, 0.15)}};
  NFunctionalSpec ns;
  ns.alpha = e.alpha;
  ns.q = e.q;
  std::vector<EstimateReport> parts;
  std::vector<AnalyticPotential> list;
  std::vector<std::string> ids;
  if (e.potentialFamily == "pinched")
    for (const auto& m : pinched_family()) {
      list.push_back(m.analytic);
      ids.push_back(m.id);
    }
  else {
    list.push_back(e.analytic);
    ids.push_back(std::string(to_string(e.analytic.kind)));
  }
  for (std::size_t k = 0; k < list.size(); ++k) {
    EstimateReport r = affine_invariance_report(list[k], *dom, A, e.meshes.back(), samples,
                                                [](const Vec2& x) { return 1 + x.x() * x.x() + std::sin(2 * x.y()); }, ns);
    tag(r, ids[k], e.meshes.back());
    r.suite = ids[k];
    parts.push_back(r);
  }
  return merge("geometry", parts);
}

using SuiteFn = EstimateReport (*)(const ExperimentConfig&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"max-principle", suite_max_principle},
      {"harnack", suite_harnack},
      {"oscillation", suite_oscillation},
      {"c1alpha-interior", suite_c1alpha_interior},
      {"cascade", suite_cascade},
      {"comparison", suite_comparison},
      {"c1alpha-boundary", suite_c1alpha_boundary},
      {"boundary-gradient", suite_boundary_gradient},
      {"barrier", suite_barrier},
      {"green", suite_green},
      {"strong-type", suite_strong_type},
      {"w1p", suite_w1p},
      {"holder", suite_holder},
      {"geometry", suite_geometry},
      {"ma-identity", suite_ma_identity},
  };
  return r;
}

std::string csv_real(Real v) { return std::isfinite(v) || std::isinf(v) ? format_real(v) : ""; }

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, fn] : registry()) n.push_back(k);
    return n;
  }();
  return names;
}

bool randomized(const std::string& suite) {
  return suite == "harnack" || suite == "strong-type" || suite == "green" || suite == "holder";
}

EstimateReport run_suite(const std::string& suite, const ExperimentConfig& config) {
  for (const auto& [name, fn] : registry())
    if (name == suite) {
      if ((randomized(suite) || config.rhsKind == "random") && !config.seed)
        throw Error(ErrorCode::InvalidArgument, "suite '" + suite + "' is randomized and needs a seed");
      EstimateReport r = fn(config);
      r.suite = suite;
      return r;
    }
  throw Error(ErrorCode::UnknownSuite, "unknown suite '" + suite + "'");
}

void write_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
               const std::vector<std::pair<std::string, std::string>>& extra, bool header) {
  if (header) {
    out << "schema=1\nsuite,trial,potential,mesh,q,qprime,p,alpha,lhs,rhs,c_emp,verdict";
    for (const auto& [k, v] : extra) out << ',' << k;
    out << '\n';
  }
  for (const auto& r : reports)
    for (const auto& t : r.trials) {
      out << r.suite << ',' << t.trial << ',' << t.potential << ',' << t.mesh << ',' << csv_real(t.q) << ','
          << csv_real(t.qprime) << ',' << csv_real(t.p) << ',' << csv_real(t.alpha) << ',' << csv_real(t.lhs) << ','
          << csv_real(t.rhs) << ',' << csv_real(t.cEmp) << ',' << (t.pass && r.pass ? "pass" : "fail");
      for (const auto& [k, v] : extra) out << ',' << v;
      out << '\n';
    }
}

std::string summary_json(const std::vector<EstimateReport>& reports) {
  nlohmann::ordered_json j;
  bool all = true;
  j["suites"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json s;
    s["suite"] = r.suite;
    s["c_emp"] = std::isfinite(r.cEmp) ? nlohmann::ordered_json(r.cEmp) : nlohmann::ordered_json(nullptr);
    s["spread"] = r.spread;
    s["tolerance"] = r.tolerance;
    s["trials"] = r.trials.size();
    s["pass"] = r.pass;
    nlohmann::ordered_json m = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.metrics) m[k] = std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
    s["metrics"] = m;
    s["notes"] = r.notes;
    j["suites"].push_back(s);
    all = all && r.pass;
  }
  j["pass"] = all;
  return j.dump(2) + "\n";
}

std::vector<std::string> solve_fields(const ExperimentConfig& e, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const DomainPtr dom = make_domain(e, e.meshes.front());
  ExperimentConfig single = e;
  single.potentialFamily = "single";
  const std::vector<Member> members = family(single, dom);
  const Member& m = members.back();
  std::mt19937_64 rng(suite_seed(e, "solve"));
  const ScalarField f = rhs_field(e, dom->grid(), rng);
  const ScalarField u = solve_on_domain(m.potential, f, ScalarField(dom->grid(), 0.0));
  const std::vector<std::string> paths = {dir + "/domain.txt", dir + "/phi.txt", dir + "/u.txt"};
  {
    std::ofstream out(paths[0]);
    write_domain(out, *dom);
  }
  save_field(paths[1], m.potential.field);
  save_field(paths[2], u);
  return paths;
}

}  // namespace malab::cli
