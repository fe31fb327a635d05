#include "experiment.hpp"

#include <doctest.h>

#include <sstream>

using namespace malab;
using namespace malab::cli;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("config sections and comments") {
  const Config c = parse("# top\n[exponents]\nq = 1.5   # inline\np = 2, 4\n\n[run]\nmeshes = 32,64\n");
  CHECK(c.real("exponents.q", 0) == 1.5);
  CHECK(c.reals("exponents.p", {}) == std::vector<Real>{2, 4});
  CHECK(c.reals("run.meshes", {}) == std::vector<Real>{32, 64});
  CHECK(c.text("run.out", "fallback") == "fallback");
}

TEST_CASE("unknown keys, duplicates and junk are hard errors") {
  CHECK(code_of([] { parse("[exponents]\nqq = 2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("q = 2\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("[run]\nmu = 0.2\nmu = 0.3\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("[run\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse("[run]\nmu\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { ExperimentConfig::from(parse("[run]\nmu = abc\n")); }) == ErrorCode::ParseError);
}

TEST_CASE("hash depends on content, not on line order") {
  const Config a = parse("[run]\nmu = 0.25\nlevels = 4\n");
  const Config b = parse("[run]\nlevels = 4\nmu = 0.25\n");
  const Config c = parse("[run]\nlevels = 5\nmu = 0.25\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.canonical() == "run.levels=4\nrun.mu=0.25\n");
}

TEST_CASE("exponent gates run at validation") {
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\nq = 1\n")); }) == ErrorCode::ExponentOutOfRange);
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\nq = 1.5\np = 2, 6\n")); }) ==
        ErrorCode::ExponentOutOfRange);
  CHECK_NOTHROW(ExperimentConfig::from(parse("[exponents]\nq = 1.5\np = 2, 4, 5.5\n")));
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\nq = 2\nqprime = 2\n")); }) ==
        ErrorCode::ExponentOutOfRange);
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\nalpha = 1\n")); }) == ErrorCode::ExponentOutOfRange);
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\ngamma = 0\n")); }) == ErrorCode::ExponentOutOfRange);
  // The singular family has to stay in L^q
  CHECK(code_of([] { ExperimentConfig::from(parse("[exponents]\nq = 1.5\n[rhs]\nsingular = 1.4\n")); }) ==
        ErrorCode::ExponentOutOfRange);
}

TEST_CASE("randomized suites demand a seed") {
  const ExperimentConfig e = ExperimentConfig::from(parse("[run]\nmeshes = 16\n"));
  for (const auto& s : suite_names())
    if (randomized(s)) CHECK(code_of([&] { run_suite(s, e); }) == ErrorCode::InvalidArgument);
  const ExperimentConfig r = ExperimentConfig::from(parse("[rhs]\nkind = random\n[run]\nmeshes = 16\n"));
  CHECK(code_of([&] { run_suite("holder", r); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { run_suite("no-such-suite", e); }) == ErrorCode::UnknownSuite);
}

TEST_CASE("registry holds every suite") {
  for (const char* s : {"max-principle", "harnack", "oscillation", "c1alpha-interior", "cascade", "comparison",
                        "c1alpha-boundary", "boundary-gradient", "barrier", "green", "strong-type", "w1p", "holder",
                        "geometry", "ma-identity"})
    CHECK(std::find(suite_names().begin(), suite_names().end(), s) != suite_names().end());
}

TEST_CASE("csv carries the versioned header and one row per trial") {
  EstimateReport r;
  r.suite = "demo";
  r.pass = true;
  TrialRow t;
  t.trial = "a";
  t.potential = "isotropic";
  t.mesh = 32;
  t.q = 2;
  t.lhs = 1;
  t.rhs = 2;
  t.cEmp = 0.5;
  r.add(t);
  std::ostringstream out;
  write_csv(out, {r}, {{"axis", "mesh"}});
  CHECK(out.str() ==
        "schema=1\nsuite,trial,potential,mesh,q,qprime,p,alpha,lhs,rhs,c_emp,verdict,axis\n"
        "demo,a,isotropic,32,2,,,,1,2,0.5,pass,mesh\n");
}

TEST_CASE("green suite is deterministic for a fixed seed") {
  const ExperimentConfig e = ExperimentConfig::from(parse("[run]\nmeshes = 16\nseed = 7\n"));
  std::ostringstream a, b;
  write_csv(a, {run_suite("green", e)});
  write_csv(b, {run_suite("green", e)});
  CHECK(a.str() == b.str());
}
