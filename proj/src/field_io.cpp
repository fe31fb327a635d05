#include "malab/field_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace malab {

namespace {

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw Error(ErrorCode::ParseError, "expected header '" + header + "'");
}

template <typename T>
T next(std::istream& in, const char* what) {
  T v;
  if (!(in >> v)) throw Error(ErrorCode::ParseError, std::string("missing or malformed ") + what);
  return v;
}

void write_grid(std::ostream& out, const Grid& g) {
  out << g.nx << ' ' << g.ny << '\n'
      << format_real(g.spacing) << ' ' << format_real(g.origin.x()) << ' ' << format_real(g.origin.y()) << '\n';
}

Grid read_grid(std::istream& in) {
  Grid g;
  g.nx = next<int>(in, "nx");
  g.ny = next<int>(in, "ny");
  g.spacing = next<Real>(in, "spacing");
  g.origin.x() = next<Real>(in, "origin");
  g.origin.y() = next<Real>(in, "origin");
  if (g.nx <= 0 || g.ny <= 0 || !(g.spacing > 0)) throw Error(ErrorCode::ParseError, "bad lattice dimensions");
  return g;
}

void expect_end(std::istream& in) {
  in >> std::ws;
  if (!in.eof()) throw Error(ErrorCode::ParseError, "trailing data after the last node row");
}

}  // namespace

std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_field(std::ostream& out, const ScalarField& field) {
  const Grid& g = field.grid;
  out << "malab-field v1\n";
  write_grid(out, g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out << format_real(field.at(i, j)) << (i + 1 == g.nx ? '\n' : ' ');
}

ScalarField read_field(std::istream& in) {
  expect_header(in, "malab-field v1");
  ScalarField f(read_grid(in));
  for (int k = 0; k < f.grid.size(); ++k) f[k] = next<Real>(in, "node value");
  expect_end(in);
  return f;
}

void write_domain(std::ostream& out, const ConvexDomain& domain) {
  out << "malab-domain v1\nvertices " << domain.vertices().size() << '\n';
  for (const auto& v : domain.vertices()) out << format_real(v.x()) << ' ' << format_real(v.y()) << '\n';
  const Grid& g = domain.grid();
  write_grid(out, g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out << int(domain.mask()[g.index(i, j)]) << (i + 1 == g.nx ? '\n' : ' ');
}

ConvexDomain read_domain(std::istream& in) {
  expect_header(in, "malab-domain v1");
  if (next<std::string>(in, "vertices tag") != "vertices") throw Error(ErrorCode::ParseError, "expected 'vertices'");
  const int m = next<int>(in, "vertex count");
  if (m < 3) throw Error(ErrorCode::ParseError, "a domain needs at least three vertices");
  std::vector<Vec2> vs(m);
  for (auto& v : vs) {
    v.x() = next<Real>(in, "vertex");
    v.y() = next<Real>(in, "vertex");
  }
  const Grid g = read_grid(in);
  ConvexDomain d = ConvexDomain::on_grid(std::move(vs), g);
  for (int k = 0; k < g.size(); ++k)
    if (next<int>(in, "mask entry") != d.mask()[k])
      throw Error(ErrorCode::ParseError, "stored mask disagrees with the polygon at node " + std::to_string(k));
  expect_end(in);
  return d;
}

void save_field(const std::string& path, const ScalarField& field) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  write_field(out, field);
}

ScalarField load_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  return read_field(in);
}

}  // namespace malab
