#include "malab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace malab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OutsideDomain: return "OutsideDomain";
    case ErrorCode::InsufficientLadder: return "InsufficientLadder";
    case ErrorCode::PinchingViolated: return "PinchingViolated";
    case ErrorCode::NonConvexIterate: return "NonConvexIterate";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::SingularOperator: return "SingularOperator";
    case ErrorCode::PoleOnBoundary: return "PoleOnBoundary";
    case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
    case ErrorCode::SectionTooSmall: return "SectionTooSmall";
    case ErrorCode::EmptySection: return "EmptySection";
    case ErrorCode::NotSubsolution: return "NotSubsolution";
    case ErrorCode::NegativeSolution: return "NegativeSolution";
    case ErrorCode::MinimizerOnBoundary: return "MinimizerOnBoundary";
    case ErrorCode::ComparisonSolveFailed: return "ComparisonSolveFailed";
    case ErrorCode::SideConditionViolated: return "SideConditionViolated";
    case ErrorCode::GeometryCheckFailed: return "GeometryCheckFailed";
    case ErrorCode::GeometryUnsupported: return "GeometryUnsupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownSuite: return "UnknownSuite";
    case ErrorCode::MissingOutputs: return "MissingOutputs";
  }
  return "Unknown";
}

Grid Grid::covering(const Vec2& lo, const Vec2& hi, int cells) {
  if (cells < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two cells");
  const Vec2 extent = hi - lo;
  const Real h = extent.maxCoeff() / cells;
  Grid g;
  g.origin = lo;
  g.spacing = h;
  g.nx = static_cast<int>(std::ceil(extent.x() / h - 1e-9)) + 1;
  g.ny = static_cast<int>(std::ceil(extent.y() / h - 1e-9)) + 1;
  return g;
}

int count(const NodeMask& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

bool is_subset(const NodeMask& a, const NodeMask& b) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k] && !b[k]) return false;
  return true;
}

Real ScalarField::interpolate(const Vec2& x) const {
  const Vec2 s = (x - grid.origin) / grid.spacing;
  const Real fx = std::clamp(s.x(), 0.0, static_cast<Real>(grid.nx - 1));
  const Real fy = std::clamp(s.y(), 0.0, static_cast<Real>(grid.ny - 1));
  const int i = std::min(static_cast<int>(fx), grid.nx - 2);
  const int j = std::min(static_cast<int>(fy), grid.ny - 2);
  const Real tx = fx - i;
  const Real ty = fy - j;
  return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
         (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
}

ScalarField ScalarField::sample(const Grid& g, const std::function<Real(const Vec2&)>& fn) {
  ScalarField out(g);
  for (int k = 0; k < g.size(); ++k) out[k] = fn(g.point(k));
  return out;
}

Real lp_norm(const ScalarField& f, const NodeMask& mask, Real p) {
  Real sum = 0;
  for (int k = 0; k < f.grid.size(); ++k)
    if (mask[k]) sum += std::pow(std::abs(f[k]), p);
  return std::pow(sum * f.grid.cell_area(), 1.0 / p);
}

Real sup_norm(const ScalarField& f, const NodeMask& mask) {
  Real m = 0;
  for (int k = 0; k < f.grid.size(); ++k)
    if (mask[k]) m = std::max(m, std::abs(f[k]));
  return m;
}

Real fit_slope(const std::vector<Real>& x, const std::vector<Real>& y) {
  const auto n = static_cast<Real>(x.size());
  if (x.size() < 2 || x.size() != y.size())
    throw Error(ErrorCode::InsufficientLadder, "slope fit needs two or more points");
  const Real mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const Real my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  Real sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

Real fit_order(const std::vector<Real>& h, const std::vector<Real>& err) {
  std::vector<Real> lx, ly;
  for (std::size_t k = 0; k < h.size(); ++k) {
    lx.push_back(std::log(h[k]));
    ly.push_back(std::log(err[k]));
  }
  return fit_slope(lx, ly);
}

}  // namespace malab
