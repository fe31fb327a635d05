#include "malab/exponents.hpp"

#include <doctest.h>

#include <limits>

using namespace malab;
using namespace malab::exponents;

namespace {
const Real inf = std::numeric_limits<Real>::infinity();
}

// Hand-computed tables; every comparison is exact.

TEST_CASE("q gate: n/2 < q <= n") {
  struct Row {
    Real q;
    int n;
    bool ok;
  };
  for (const Row& r : {Row{1.0, 2, false}, Row{0.5, 2, false}, Row{1.0000001, 2, true}, Row{1.5, 2, true},
                       Row{2.0, 2, true}, Row{2.0001, 2, false}, Row{1.5, 3, false}, Row{1.6, 3, true},
                       Row{3.0, 3, true}, Row{3.5, 3, false}}) {
    CAPTURE(r.q);
    CAPTURE(r.n);
    CHECK(q_admissible(r.q, r.n) == r.ok);
  }
}

TEST_CASE("Sobolev limit nq/(n-q)") {
  CHECK(sobolev_limit(1.5) == 6.0);
  CHECK(sobolev_limit(1.2) == 2 * 1.2 / (2 - 1.2));
  CHECK(sobolev_limit(2.0) == inf);
  CHECK(sobolev_limit(2.0, 3) == 6.0);
}

TEST_CASE("p gate: 1 <= p < nq/(n-q)") {
  struct Row {
    Real p, q;
    bool ok;
  };
  for (const Row& r : {Row{2, 1.5, true}, Row{4, 1.5, true}, Row{5.5, 1.5, true}, Row{6, 1.5, false},
                       Row{6.5, 1.5, false}, Row{1, 1.5, true}, Row{0.99, 1.5, false}, Row{1e6, 2, true},
                       Row{2, 1, false}, Row{3, 1.2, false}, Row{2.9, 1.2, true}}) {
    CAPTURE(r.p);
    CAPTURE(r.q);
    CHECK(p_admissible(r.p, r.q) == r.ok);
  }
}

TEST_CASE("conjugate exponent and Green integrability limit") {
  CHECK(conjugate(2.0) == 2.0);
  CHECK(conjugate(1.5) == 3.0);
  CHECK(conjugate(4.0) == 4.0 / 3.0);
  CHECK(green_integrability_limit(2) == inf);
  CHECK(green_integrability_limit(3) == 3.0);
  CHECK(green_integrability_limit(4) == 2.0);
  CHECK(conjugate_admissible(1.5, 2));
  CHECK_FALSE(conjugate_admissible(1.5, 3));  // q' = 3, not < 3
  CHECK(conjugate_admissible(2.0, 3));        // q' = 2 < 3
  CHECK_FALSE(conjugate_admissible(2.0, 4));  // q' = 2, not < 2
  CHECK_FALSE(conjugate_admissible(1.0, 2));
}

TEST_CASE("boundary exponent min{alpha, (3/8)(2 - n/q)}") {
  CHECK(boundary_alpha(0.5, 2) == 0.375);
  CHECK(boundary_alpha(0.3, 2) == 0.3);
  CHECK(boundary_alpha(0.2, 1.6) == 0.2);
  CHECK(boundary_alpha(0.5, 1.6) == 0.375 * (2 - 2 / 1.6));
  CHECK(boundary_holder_exponent(0.375) == 0.375 / 6.375);
  CHECK(boundary_holder_exponent(0.375, 3) == 0.375 / 9.375);
}

TEST_CASE("derived powers") {
  CHECK(volume_exponent(2) == 0.5);
  CHECK(volume_exponent(1.5, 2) == 1 - 1 / 1.5);
  CHECK(ball_volume_exponent(2) == 0.375);
  CHECK(oscillation_height_exponent(2) == 0.5);
  CHECK(n_functional_power(0.3) == 0.35);
  CHECK(default_qprime(2) == 1.5);
  CHECK(default_alpha(2, 4) == 0.25);
}

TEST_CASE("require_* raise the exponent error") {
  CHECK_THROWS_WITH_AS(require_q(1.0), doctest::Contains("exponent out of range"), Error);
  CHECK_NOTHROW(require_q(1.5));
  CHECK_THROWS_AS(require_p(6, 1.5), Error);
  CHECK_NOTHROW(require_p(5.5, 1.5));
  CHECK_THROWS_AS(require_alpha(0.0), Error);
  CHECK_THROWS_AS(require_alpha(1.0), Error);
  try {
    require_p(6, 1.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ExponentOutOfRange);
  }
}
