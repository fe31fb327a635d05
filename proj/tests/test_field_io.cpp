#include "malab/field_io.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace malab;

TEST_CASE("field round trip is bit exact") {
  const Grid g = Grid::covering({-1, -0.5}, {1, 0.5}, 16);
  const ScalarField f = ScalarField::sample(g, [](const Vec2& x) { return std::sin(7 * x.x()) / 3 + std::exp(x.y()); });
  std::stringstream s;
  write_field(s, f);
  const ScalarField back = read_field(s);
  CHECK(back.grid == g);
  CHECK((back.values.array() == f.values.array()).all());
}

TEST_CASE("writing twice gives identical bytes") {
  const Grid g = Grid::covering({0, 0}, {1, 1}, 8);
  const ScalarField f = ScalarField::sample(g, [](const Vec2& x) { return 1.0 / 3 + x.x(); });
  std::ostringstream a, b;
  write_field(a, f);
  std::istringstream in(a.str());
  write_field(b, read_field(in));
  CHECK(a.str() == b.str());
}

TEST_CASE("malformed field text is rejected") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_field(in);
  };
  CHECK_THROWS_AS(parse("malab-field v2\n1 1\n1 0 0\n5\n"), Error);
  CHECK_THROWS_AS(parse("malab-field v1\n2 1\n1 0 0\n5\n"), Error);
  CHECK_THROWS_AS(parse("malab-field v1\n1 1\n1 0 0\n5 6\n"), Error);
  CHECK_NOTHROW(parse("malab-field v1\n1 1\n1 0 0\n5\n"));
}

TEST_CASE("domain round trip keeps vertices and mask") {
  const ConvexDomain d = ConvexDomain::disk({0.1, -0.2}, 0.7, 20, 12);
  std::stringstream s;
  write_domain(s, d);
  const ConvexDomain back = read_domain(s);
  REQUIRE(back.vertices().size() == d.vertices().size());
  for (std::size_t k = 0; k < d.vertices().size(); ++k) CHECK(back.vertices()[k] == d.vertices()[k]);
  CHECK(back.grid() == d.grid());
  CHECK(back.mask() == d.mask());
}

TEST_CASE("format_real keeps 17 digits") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_real(1.0 / 3)) == 1.0 / 3);
}
