#include "malab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace malab {

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::IsotropicQuadratic: return "isotropicQuadratic";
    case PotentialKind::GeneralQuadratic: return "generalQuadratic";
    case PotentialKind::RadialPower: return "radialPower";
    case PotentialKind::PerturbedQuadratic: return "perturbedQuadratic";
  }
  return "unknown";
}

AnalyticPotential AnalyticPotential::isotropic() { return {}; }

AnalyticPotential AnalyticPotential::quadratic(const Mat2& m) {
  AnalyticPotential p;
  p.kind = PotentialKind::GeneralQuadratic;
  p.matrix = 0.5 * (m + m.transpose());
  return p;
}

AnalyticPotential AnalyticPotential::radial_power(Real c) {
  AnalyticPotential p;
  p.kind = PotentialKind::RadialPower;
  p.coefficient = c;
  return p;
}

AnalyticPotential AnalyticPotential::perturbed(Real eps) {
  AnalyticPotential p;
  p.kind = PotentialKind::PerturbedQuadratic;
  p.coefficient = eps;
  return p;
}

namespace {

struct BaseJet {
  Real value;
  Vec2 gradient;
  Mat2 hessian;
};

BaseJet base_jet(const AnalyticPotential& p, const Vec2& y) {
  const Mat2 id = Mat2::Identity();
  switch (p.kind) {
    case PotentialKind::IsotropicQuadratic:
      return {0.5 * y.squaredNorm(), y, id};
    case PotentialKind::GeneralQuadratic:
      return {0.5 * y.dot(p.matrix * y), p.matrix * y, p.matrix};
    case PotentialKind::RadialPower: {
      const Real r2 = y.squaredNorm();
      const Real c = p.coefficient;
      return {0.5 * r2 + c * r2 * r2 / 12, y + c * r2 * y / 3,
              id + c * (r2 * id + 2 * y * y.transpose()) / 3};
    }
    case PotentialKind::PerturbedQuadratic: {
      const Real e = p.coefficient;
      const Real pi = EIGEN_PI;
      const Real c1 = std::cos(pi * y.x()), c2 = std::cos(pi * y.y());
      const Real s1 = std::sin(pi * y.x()), s2 = std::sin(pi * y.y());
      Mat2 h;
      h << -c1 * c2, s1 * s2, s1 * s2, -c1 * c2;
      return {0.5 * y.squaredNorm() + e * c1 * c2, y + e * pi * Vec2(-s1 * c2, -c1 * s2), id + e * pi * pi * h};
    }
  }
  return {0, Vec2::Zero(), id};
}

}  // namespace

Real AnalyticPotential::value(const Vec2& x) const {
  return base_jet(*this, pre(x)).value / scale + slope.dot(x) + offset;
}

Vec2 AnalyticPotential::gradient(const Vec2& x) const {
  return pre.matrix.transpose() * base_jet(*this, pre(x)).gradient / scale + slope;
}

Mat2 AnalyticPotential::hessian(const Vec2& x) const {
  return pre.matrix.transpose() * base_jet(*this, pre(x)).hessian * pre.matrix / scale;
}

AnalyticPotential AnalyticPotential::composed(const Affine& map, Real a) const {
  // phi(Ax+z)/a = base(T(Ax+z)) / (scale a) + slope.(Ax+z)/a + offset/a
  AnalyticPotential p = *this;
  p.pre = pre.after(map);
  p.scale = scale * a;
  p.slope = map.matrix.transpose() * slope / a;
  p.offset = (slope.dot(map.shift) + offset) / a;
  return p;
}

AnalyticPotential AnalyticPotential::normalized_at(const Vec2& x0) const {
  AnalyticPotential p = *this;
  const Vec2 g = gradient(x0);
  p.slope -= g;
  p.offset -= value(x0) - g.dot(x0);
  return p;
}

std::pair<Real, Real> AnalyticPotential::det_interval(const std::vector<Vec2>& polygon) const {
  const Real factor = pre.det() * pre.det() / (scale * scale);
  switch (kind) {
    case PotentialKind::IsotropicQuadratic:
      return {factor, factor};
    case PotentialKind::GeneralQuadratic: {
      Eigen::SelfAdjointEigenSolver<Mat2> es(matrix);
      if (es.eigenvalues().minCoeff() <= 0) throw Error(ErrorCode::PinchingViolated, "quadratic is not uniformly convex");
      const Real d = matrix.determinant() * factor;
      return {d, d};
    }
    case PotentialKind::PerturbedQuadratic: {
      const Real spread = std::abs(coefficient) * EIGEN_PI * EIGEN_PI;
      if (spread >= 1) throw Error(ErrorCode::PinchingViolated, "perturbation too large for convexity");
      return {(1 - spread) * (1 - spread) * factor, (1 + spread) * (1 + spread) * factor};
    }
    case PotentialKind::RadialPower: {
      if (coefficient < 0) throw Error(ErrorCode::PinchingViolated, "radial power needs c >= 0");
      std::vector<Vec2> image;
      for (const auto& v : polygon) image.push_back(pre(v));
      if (pre.det() < 0) std::reverse(image.begin(), image.end());
      Real rmax = 0, rmin = 0;
      for (const auto& v : image) rmax = std::max(rmax, v.norm());
      if (!polygon_contains(image, Vec2::Zero())) {
        rmin = std::numeric_limits<Real>::infinity();
        for (std::size_t k = 0; k < image.size(); ++k) {
          const Vec2& a = image[k];
          const Vec2 e = image[(k + 1) % image.size()] - a;
          const Real t = std::clamp(-a.dot(e) / e.squaredNorm(), 0.0, 1.0);
          rmin = std::min(rmin, (a + t * e).norm());
        }
      }
      auto d = [&](Real r) { return (1 + coefficient * r * r / 3) * (1 + coefficient * r * r); };
      return {d(rmin) * factor, d(rmax) * factor};
    }
  }
  return {factor, factor};
}

namespace {

std::string fmt(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string AnalyticPotential::descriptor() const {
  std::vector<std::pair<std::string, Real>> kv;
  switch (kind) {
    case PotentialKind::IsotropicQuadratic: break;
    case PotentialKind::GeneralQuadratic:
      kv = {{"m11", matrix(0, 0)}, {"m12", matrix(0, 1)}, {"m22", matrix(1, 1)}};
      break;
    case PotentialKind::RadialPower: kv = {{"c", coefficient}}; break;
    case PotentialKind::PerturbedQuadratic: kv = {{"eps", coefficient}}; break;
  }
  if (!pre.matrix.isIdentity(0) || !pre.shift.isZero(0)) {
    kv.insert(kv.end(), {{"a11", pre.matrix(0, 0)}, {"a12", pre.matrix(0, 1)}, {"a21", pre.matrix(1, 0)},
                         {"a22", pre.matrix(1, 1)}, {"b1", pre.shift.x()}, {"b2", pre.shift.y()}});
  }
  if (scale != 1) kv.emplace_back("scale", scale);
  if (!slope.isZero(0)) {
    kv.emplace_back("s1", slope.x());
    kv.emplace_back("s2", slope.y());
  }
  if (offset != 0) kv.emplace_back("offset", offset);
  std::string out(to_string(kind));
  for (std::size_t k = 0; k < kv.size(); ++k) out += (k ? "," : ":") + kv[k].first + "=" + fmt(kv[k].second);
  return out;
}

AnalyticPotential AnalyticPotential::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::map<std::string, Real> kv;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "bad potential parameter '" + item + "'");
      try {
        kv[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::ParseError, "bad number in '" + item + "'");
      }
    }
  }
  auto take = [&](const std::string& key, Real fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const Real v = it->second;
    kv.erase(it);
    return v;
  };
  AnalyticPotential p;
  if (name == "isotropicQuadratic") {
    p = isotropic();
  } else if (name == "generalQuadratic") {
    const Real m12 = take("m12", 0);
    Mat2 m;
    m << take("m11", 1), m12, m12, take("m22", 1);
    p = quadratic(m);
  } else if (name == "radialPower") {
    p = radial_power(take("c", 1));
  } else if (name == "perturbedQuadratic") {
    p = perturbed(take("eps", 0.05));
  } else {
    throw Error(ErrorCode::ParseError, "unknown potential kind '" + name + "'");
  }
  Mat2 a;
  a << take("a11", 1), take("a12", 0), take("a21", 0), take("a22", 1);
  const Vec2 b(take("b1", 0), take("b2", 0));
  p.pre = Affine(a, b);
  p.scale = take("scale", 1);
  p.slope = Vec2(take("s1", 0), take("s2", 0));
  p.offset = take("offset", 0);
  if (!kv.empty()) throw Error(ErrorCode::ParseError, "unknown potential parameter '" + kv.begin()->first + "'");
  return p;
}

// ---- ConvexPotential -------------------------------------------------------

namespace {

NodeMask inner_of(const Grid& g, const NodeMask& support) {
  NodeMask inner(g.size(), 0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int k = g.index(i, j);
      if (!support[k]) continue;
      bool ok = true;
      for (const auto& o : kNeighbours) {
        const int a = i + o[0], b = j + o[1];
        if (!g.contains(a, b) || !support[g.index(a, b)]) {
          ok = false;
          break;
        }
      }
      inner[k] = ok;
    }
  return inner;
}

Real one_sided(const ScalarField& f, const NodeMask& support, int i, int j, int di, int dj) {
  const Grid& g = f.grid;
  auto in = [&](int a, int b) { return g.contains(a, b) && support[g.index(a, b)]; };
  const Real h = g.spacing;
  const bool fwd = in(i + di, j + dj), bwd = in(i - di, j - dj);
  if (fwd && bwd) return (f.at(i + di, j + dj) - f.at(i - di, j - dj)) / (2 * h);
  if (fwd && in(i + 2 * di, j + 2 * dj))
    return (-3 * f.at(i, j) + 4 * f.at(i + di, j + dj) - f.at(i + 2 * di, j + 2 * dj)) / (2 * h);
  if (bwd && in(i - 2 * di, j - 2 * dj))
    return (3 * f.at(i, j) - 4 * f.at(i - di, j - dj) + f.at(i - 2 * di, j - 2 * dj)) / (2 * h);
  if (fwd) return (f.at(i + di, j + dj) - f.at(i, j)) / h;
  if (bwd) return (f.at(i, j) - f.at(i - di, j - dj)) / h;
  return 0;
}

}  // namespace

NodeMask ConvexPotential::inner() const { return inner_of(grid(), support); }

Vec2 grid_gradient(const ScalarField& f, const NodeMask& support, int node) {
  const int i = f.grid.col(node), j = f.grid.row(node);
  return Vec2(one_sided(f, support, i, j, 1, 0), one_sided(f, support, i, j, 0, 1));
}

Vec2 ConvexPotential::gradient(int node) const { return grid_gradient(field, support, node); }

int ConvexPotential::argmin() const {
  int best = -1;
  for (int k = 0; k < grid().size(); ++k)
    if (support[k] && (best < 0 || field[k] < field[best])) best = k;
  return best;
}

ConvexPotential analytic_potential(const AnalyticPotential& analytic, DomainPtr domain,
                                   std::optional<std::pair<Real, Real>> pinching) {
  const auto [lo, hi] = analytic.det_interval(domain->vertices());
  ConvexPotential p;
  if (pinching) {
    if (lo < pinching->first - 1e-12 || hi > pinching->second + 1e-12)
      throw Error(ErrorCode::PinchingViolated, "certified det interval [" + fmt(lo) + ", " + fmt(hi) +
                                                   "] leaves [" + fmt(pinching->first) + ", " +
                                                   fmt(pinching->second) + "]");
    p.lambda = pinching->first;
    p.Lambda = pinching->second;
  } else {
    p.lambda = lo;
    p.Lambda = hi;
  }
  const Grid& g = domain->grid();
  p.field = ScalarField::sample(g, [&](const Vec2& x) { return analytic.value(x); });
  p.detField = ScalarField::sample(g, [&](const Vec2& x) { return analytic.det(x); });
  p.analytic = analytic;
  p.support = domain->mask();
  p.domain = std::move(domain);
  return p;
}

// ---- Hessian, cofactor -----------------------------------------------------

namespace {

/// Fills `defined` nodes outside `valid` by averaging already-filled
/// neighbours, sweeping outward.
void fill_by_neighbours(SymmetricField& f) {
  const Grid& g = f.grid;
  NodeMask done = f.valid;
  bool progress = true;
  while (progress) {
    progress = false;
    NodeMask next = done;
    for (int k = 0; k < g.size(); ++k) {
      if (!f.defined[k] || done[k]) continue;
      const int i = g.col(k), j = g.row(k);
      Mat2 acc = Mat2::Zero();
      int n = 0;
      for (const auto& o : kNeighbours) {
        const int a = i + o[0], b = j + o[1];
        if (!g.contains(a, b) || !done[g.index(a, b)]) continue;
        acc += f.at(g.index(a, b));
        ++n;
      }
      if (n) {
        f.set(k, acc / n);
        next[k] = 1;
        progress = true;
      }
    }
    done = std::move(next);
  }
}

SymmetricField blank(const Grid& g, const NodeMask& support) {
  SymmetricField f;
  f.grid = g;
  f.xx = f.xy = f.yy = VecX::Zero(g.size());
  f.valid.assign(g.size(), 0);
  f.defined = support;
  return f;
}

}  // namespace

HessianField hessian(const ConvexPotential& potential) {
  const Grid& g = potential.grid();
  const NodeMask inner = potential.inner();
  HessianField out{blank(g, potential.support)};
  const Real h2 = g.cell_area();
  const ScalarField& u = potential.field;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int k = g.index(i, j);
      if (!inner[k]) continue;
      const Real p = u.at(i, j);
      out.xx[k] = ((u.at(i + 1, j) - p) - (p - u.at(i - 1, j))) / h2;
      out.yy[k] = ((u.at(i, j + 1) - p) - (p - u.at(i, j - 1))) / h2;
      out.xy[k] = ((u.at(i + 1, j + 1) - u.at(i - 1, j + 1)) - (u.at(i + 1, j - 1) - u.at(i - 1, j - 1))) / (4 * h2);
      out.valid[k] = 1;
    }
  if (potential.analytic) {
    for (int k = 0; k < g.size(); ++k)
      if (out.defined[k] && !out.valid[k]) out.set(k, potential.analytic->hessian(g.point(k)));
  } else {
    fill_by_neighbours(out);
  }
  return out;
}

CofactorField cofactor(const HessianField& hess) {
  CofactorField out{blank(hess.grid, hess.defined)};
  out.valid = hess.valid;
  for (int k = 0; k < hess.grid.size(); ++k)
    if (hess.defined[k]) out.set(k, cofactor_matrix(hess.at(k)));
  return out;
}

CofactorField cofactor(const ConvexPotential& potential) {
  if (!potential.analytic) return cofactor(hessian(potential));
  const Grid& g = potential.grid();
  CofactorField out{blank(g, potential.support)};
  out.valid = potential.inner();
  for (int k = 0; k < g.size(); ++k)
    if (out.defined[k]) out.set(k, cofactor_matrix(potential.analytic->hessian(g.point(k))));
  return out;
}

ScalarField divergence_defect(const CofactorField& cof, NodeMask* checked) {
  const Grid& g = cof.grid;
  ScalarField out(g, 0.0);
  NodeMask used(g.size(), 0);
  const Real h = g.spacing;
  auto ok = [&](int i, int j) { return g.contains(i, j) && cof.valid[g.index(i, j)]; };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!ok(i, j) || !ok(i + 1, j) || !ok(i - 1, j) || !ok(i, j + 1) || !ok(i, j - 1)) continue;
      const int e = g.index(i + 1, j), w = g.index(i - 1, j), n = g.index(i, j + 1), s = g.index(i, j - 1);
      const Real d1 = (cof.xx[e] - cof.xx[w]) / (2 * h) + (cof.xy[n] - cof.xy[s]) / (2 * h);
      const Real d2 = (cof.xy[e] - cof.xy[w]) / (2 * h) + (cof.yy[n] - cof.yy[s]) / (2 * h);
      const int k = g.index(i, j);
      out[k] = std::max(std::abs(d1), std::abs(d2));
      used[k] = 1;
    }
  if (checked) *checked = std::move(used);
  return out;
}

Real ma_identity_residual(const ConvexPotential& potential) {
  const HessianField hess = hessian(potential);
  const CofactorField cof = cofactor(hess);
  Real worst = 0;
  for (int k = 0; k < hess.grid.size(); ++k) {
    if (!hess.valid[k]) continue;
    const Real tr = (cof.at(k) * hess.at(k)).trace();
    worst = std::max(worst, std::abs(tr - kDim * potential.detField[k]));
  }
  return worst;
}

bool discretely_convex(const ConvexPotential& potential, Real tol) {
  const Grid& g = potential.grid();
  const NodeMask inner = potential.inner();
  const ScalarField& u = potential.field;
  const Real h2 = g.cell_area();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!inner[g.index(i, j)]) continue;
      const Real p = 2 * u.at(i, j);
      const Real dxx = (u.at(i + 1, j) + u.at(i - 1, j) - p) / h2;
      const Real dyy = (u.at(i, j + 1) + u.at(i, j - 1) - p) / h2;
      const Real dd1 = (u.at(i + 1, j + 1) + u.at(i - 1, j - 1) - p) / (2 * h2);
      const Real dd2 = (u.at(i + 1, j - 1) + u.at(i - 1, j + 1) - p) / (2 * h2);
      if (std::min({dxx, dyy, dd1, dd2}) < -tol) return false;
    }
  return true;
}

}  // namespace malab
