#include "malab/functionals.hpp"

#include "malab/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace malab {

void NFunctionalSpec::validate() const {
  if (!(q > 0.5 * n)) throw Error(ErrorCode::ExponentOutOfRange, "exponent out of range: N functional needs q > n/2");
  exponents::require_alpha(alpha);
  if (!(r0 > 0)) throw Error(ErrorCode::InvalidArgument, "N functional needs r0 > 0");
}

namespace {

std::vector<Real> n_ladder(const Grid& g, Real r0) {
  std::vector<Real> ladder;
  for (Real t = ladder_floor(g); t < r0 * (1 - 1e-12); t *= 2) ladder.push_back(t);
  ladder.push_back(r0);
  return ladder;
}

/// Per-level node counts and sums of w over {level < t_k}.
struct LadderSums {
  std::vector<Real> counts;
  std::vector<std::vector<Real>> sums;
};

LadderSums ladder_sums(const ScalarField& level, const std::vector<Real>& ladder,
                       const std::vector<const ScalarField*>& weights, const std::vector<Real>& powers) {
  const std::size_t levels = ladder.size();
  LadderSums out;
  out.counts.assign(levels, 0);
  out.sums.assign(weights.size(), std::vector<Real>(levels, 0));
  for (int k = 0; k < level.grid.size(); ++k) {
    const Real s = level[k];
    if (!std::isfinite(s)) continue;
    const auto b = static_cast<std::size_t>(std::upper_bound(ladder.begin(), ladder.end(), s) - ladder.begin());
    if (b == levels) continue;
    out.counts[b] += 1;
    for (std::size_t w = 0; w < weights.size(); ++w) {
      const Real v = std::abs((*weights[w])[k]);
      out.sums[w][b] += powers[w] == 1 ? v : std::pow(v, powers[w]);
    }
  }
  for (std::size_t b = 1; b < levels; ++b) {
    out.counts[b] += out.counts[b - 1];
    for (auto& s : out.sums) s[b] += s[b - 1];
  }
  return out;
}

}  // namespace

Real n_functional(const ConvexPotential& potential, const ScalarField& f, const NFunctionalSpec& spec, int z,
                  Real r) {
  spec.validate();
  const ScalarField level = section_level(potential, z);
  Real sum = 0;
  int n = 0;
  for (int k = 0; k < level.grid.size(); ++k)
    if (level[k] < r) {
      sum += std::pow(std::abs(f[k]), spec.q);
      ++n;
    }
  if (n == 0) throw Error(ErrorCode::EmptySection, "N functional over an empty section");
  return std::pow(r, spec.power()) * std::pow(sum / n, 1 / spec.q);
}

std::vector<Real> n_functional_field(const ConvexPotential& potential, const ScalarField& f,
                                     const NFunctionalSpec& spec, const std::vector<int>& nodes) {
  spec.validate();
  const std::vector<Real> ladder = n_ladder(potential.grid(), spec.r0);
  std::vector<Real> out;
  out.reserve(nodes.size());
  for (int z : nodes) {
    const LadderSums s = ladder_sums(section_level(potential, z), ladder, {&f}, {spec.q});
    Real best = 0;
    for (std::size_t b = 0; b < ladder.size(); ++b)
      if (s.counts[b] > 0)
        best = std::max(best, std::pow(ladder[b], spec.power()) * std::pow(s.sums[0][b] / s.counts[b], 1 / spec.q));
    out.push_back(best);
  }
  return out;
}

Real n_functional_sup(const ConvexPotential& potential, const ScalarField& f, const NFunctionalSpec& spec, int z) {
  return n_functional_field(potential, f, spec, {z}).front();
}

std::vector<MaximalField> maximal_function(const ConvexPotential& potential, const std::vector<ScalarField>& fs) {
  const Grid& g = potential.grid();
  std::vector<MaximalField> out(fs.size());
  for (auto& m : out) m.values = ScalarField(g, 0.0);
  std::vector<const ScalarField*> weights;
  for (const auto& f : fs) weights.push_back(&f);
  const std::vector<Real> powers(fs.size(), 1.0);
  std::vector<Real> ladder{ladder_floor(g)};
  for (int c = 0; c < g.size(); ++c) {
    if (!potential.support[c]) continue;
    const ScalarField level = section_level(potential, c);
    Real top = 0;
    for (int k = 0; k < g.size(); ++k)
      if (std::isfinite(level[k])) top = std::max(top, level[k]);
    while (ladder.back() <= top) ladder.push_back(2 * ladder.back());
    const auto used = static_cast<std::size_t>(std::upper_bound(ladder.begin(), ladder.end(), top) - ladder.begin()) + 1;
    const std::vector<Real> local(ladder.begin(), ladder.begin() + static_cast<long>(std::min(used, ladder.size())));
    const LadderSums s = ladder_sums(level, local, weights, powers);
    for (std::size_t w = 0; w < fs.size(); ++w) {
      Real best = 0;
      for (std::size_t b = 0; b < local.size(); ++b)
        if (s.counts[b] > 0) best = std::max(best, s.sums[w][b] / s.counts[b]);
      out[w].values[c] = best;
    }
  }
  for (auto& m : out) m.ladder = ladder;
  return out;
}

MaximalField maximal_function(const ConvexPotential& potential, const ScalarField& f) {
  return maximal_function(potential, std::vector<ScalarField>{f}).front();
}

Real w1p_norm(const ScalarField& u, const NodeMask& mask, Real p) {
  ScalarField grad(u.grid, 0.0);
  for (int k = 0; k < u.grid.size(); ++k)
    if (mask[k]) grad[k] = grid_gradient(u, mask, k).norm();
  return lp_norm(u, mask, p) + lp_norm(grad, mask, p);
}

Real c1gamma_norm(const Sampler& value, const std::function<Vec2(const Vec2&)>& gradient, const Grid& grid,
                  const std::vector<int>& nodes, Real gamma) {
  constexpr std::size_t kMaxPairsSide = 2000;
  std::vector<int> picked;
  const std::size_t stride = std::max<std::size_t>(1, (nodes.size() + kMaxPairsSide - 1) / kMaxPairsSide);
  for (std::size_t k = 0; k < nodes.size(); k += stride) picked.push_back(nodes[k]);
  Real supV = 0, supG = 0, semi = 0;
  std::vector<Vec2> pts, grads;
  for (int k : picked) {
    const Vec2 x = grid.point(k);
    pts.push_back(x);
    grads.push_back(gradient(x));
    supV = std::max(supV, std::abs(value(x)));
    supG = std::max(supG, grads.back().norm());
  }
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      semi = std::max(semi, (grads[a] - grads[b]).norm() / std::pow((pts[a] - pts[b]).norm(), gamma));
  return supV + supG + semi;
}

AffineFit fit_affine(const ScalarField& u, const NodeMask& mask, const Vec2& origin) {
  const Grid& g = u.grid;
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (int k = 0; k < g.size(); ++k) {
    if (!mask[k]) continue;
    const Vec2 d = g.point(k) - origin;
    const Eigen::Vector3d row(1, d.x(), d.y());
    ata += row * row.transpose();
    atb += row * u[k];
  }
  AffineFit fit;
  fit.origin = origin;
  if (ata(0, 0) == 0) return fit;
  const Eigen::Vector3d c = ata.completeOrthogonalDecomposition().solve(atb);
  fit.a = c[0];
  fit.b = Vec2(c[1], c[2]);
  for (int k = 0; k < g.size(); ++k)
    if (mask[k]) fit.maxError = std::max(fit.maxError, std::abs(u[k] - fit(g.point(k))));
  return fit;
}

Real oscillation(const ScalarField& u, const NodeMask& mask) {
  Real lo = std::numeric_limits<Real>::infinity(), hi = -lo;
  for (int k = 0; k < u.grid.size(); ++k)
    if (mask[k]) {
      lo = std::min(lo, u[k]);
      hi = std::max(hi, u[k]);
    }
  return hi >= lo ? hi - lo : 0.0;
}

NodeMask ball_mask(const Grid& grid, const NodeMask& support, const Vec2& center, Real radius) {
  NodeMask m(grid.size(), 0);
  for (int k = 0; k < grid.size(); ++k)
    if (support[k] && (grid.point(k) - center).norm() < radius) m[k] = 1;
  return m;
}

NodeMask mask_and(const NodeMask& a, const NodeMask& b) {
  NodeMask m(a.size(), 0);
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = a[k] && b[k];
  return m;
}

Sampler singular_power(const Vec2& x0, Real s, Real cap) {
  return [x0, s, cap](const Vec2& x) { return std::pow(std::max((x - x0).norm(), cap), -s); };
}

ScalarField random_smooth_field(const Grid& grid, std::mt19937_64& rng, Real floor) {
  std::uniform_real_distribution<Real> unit(0, 1);
  const Real pi = EIGEN_PI;
  const Vec2 lo = grid.origin;
  const Vec2 ext = grid.spacing * Vec2(grid.nx - 1, grid.ny - 1);
  struct Mode {
    Vec2 k;
    Real phase, amp;
  };
  struct Bump {
    Vec2 c;
    Real width, amp;
  };
  std::vector<Mode> modes;
  std::vector<Bump> bumps;
  for (int m = 0; m < 4; ++m)
    modes.push_back({Vec2(6 * pi * (unit(rng) - 0.5), 6 * pi * (unit(rng) - 0.5)), 2 * pi * unit(rng),
                     0.2 + 0.8 * unit(rng)});
  for (int b = 0; b < 3; ++b)
    bumps.push_back({lo + Vec2(unit(rng) * ext.x(), unit(rng) * ext.y()), 0.1 + 0.3 * unit(rng), 0.5 + 1.5 * unit(rng)});
  return ScalarField::sample(grid, [&](const Vec2& x) {
    Real v = 0;
    for (const auto& m : modes) v += m.amp * std::cos(m.k.dot(x) + m.phase);
    for (const auto& b : bumps) v += b.amp * std::exp(-(x - b.c).squaredNorm() / (2 * b.width * b.width));
    return std::abs(v) + floor;
  });
}

std::vector<FamilyMember> pinched_family() {
  const Real angle = EIGEN_PI / 6;
  Mat2 rot;
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const Mat2 rotated = rot * Vec2(1.5, 0.8).asDiagonal() * rot.transpose();
  return {
      {"isotropic", AnalyticPotential::isotropic()},
      {"diag-2-0.5", AnalyticPotential::quadratic(Vec2(2, 0.5).asDiagonal())},
      {"rotated-1.5-0.8", AnalyticPotential::quadratic(rotated)},
      {"perturbed-0.02", AnalyticPotential::perturbed(0.02)},
      {"radial-0.5", AnalyticPotential::radial_power(0.5)},
  };
}

Real spread(const std::vector<Real>& values) {
  if (values.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi > 0 ? (*hi - *lo) / *hi : 0.0;
}

}  // namespace malab
