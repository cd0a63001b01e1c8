#include <cmath>
#include <limits>
#include <set>

#include "doctest.h"
#include "trajzoom/model.hpp"
#include "trajzoom/random.hpp"

using namespace trajzoom;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIo;
}

std::string field_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("figure parameters validate") {
  ModelParams m;
  m.lambda = 1.0;
  m.p = 0.5;
  m.gamma = MeasurementRate::finite(200.0);
  m.epsilon = 0.3;
  m.ds = 1e-5;
  CHECK(validate(m) == m);
  CHECK(validate(m, Regime::kFiniteRate) == m);
}

TEST_CASE("out-of-range fields are named") {
  ModelParams m;
  m.p = 0.0;
  CHECK(code_of([&] { validate(m); }) == ErrorCode::kOutOfRange);
  CHECK(field_of([&] { validate(m); }) == "p");
  m = ModelParams{};
  m.lambda = -1.0;
  CHECK(field_of([&] { validate(m); }) == "lambda");
  m = ModelParams{};
  m.epsilon = 1.0;
  CHECK(field_of([&] { validate(m); }) == "epsilon");
  m = ModelParams{};
  m.ds = std::numeric_limits<double>::quiet_NaN();
  CHECK(field_of([&] { validate(m); }) == "ds");
  m = ModelParams{};
  m.gamma = MeasurementRate::finite(-3.0);
  CHECK(field_of([&] { validate(m); }) == "gamma");
}

TEST_CASE("gamma kind must match the regime") {
  ModelParams m;
  m.gamma = MeasurementRate::infinite();
  CHECK_NOTHROW(validate(m, Regime::kLimit));
  CHECK(code_of([&] { validate(m, Regime::kFiniteRate); }) == ErrorCode::kInconsistent);
  m.gamma = MeasurementRate::finite(10.0);
  CHECK(code_of([&] { validate(m, Regime::kLimit); }) == ErrorCode::kInconsistent);
  CHECK(code_of([] { (void)MeasurementRate::infinite().value(); }) == ErrorCode::kInconsistent);
}

TEST_CASE("error text carries code, field and line") {
  const Error e(ErrorCode::kUnknownKey, "foo", "unknown key", 7);
  CHECK(std::string(e.what()) == "UNKNOWN_KEY(foo) at line 7: unknown key");
  CHECK(e.line() == 7);
}

TEST_CASE("trajectory invariants") {
  Trajectory ok{{0.0, 0.1, 0.2}, {0.5, 0.6, 0.4}, {0.0, 0.0, 0.3}};
  CHECK_NOTHROW(check_invariants(ok, 0.1));
  Trajectory bad = ok;
  bad.q[1] = 1.5;
  CHECK(code_of([&] { check_invariants(bad, 0.1); }) == ErrorCode::kOutOfRange);
  bad = ok;
  bad.t[2] = -0.1;
  CHECK(code_of([&] { check_invariants(bad, 0.1); }) == ErrorCode::kOutOfRange);
  bad = ok;
  bad.s[2] = 0.25;
  CHECK(code_of([&] { check_invariants(bad, 0.1); }) == ErrorCode::kOutOfRange);
  CHECK(code_of([&] { check_invariants(Trajectory{}, 0.1); }) == ErrorCode::kEmptyPath);
}

TEST_CASE("random streams are pure functions of the seed triple") {
  RandomStream a({42, 3}), b({42, 3});
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  std::set<double> firsts;
  for (std::uint64_t idx = 0; idx < 50; ++idx) firsts.insert(RandomStream({42, idx}).normal());
  CHECK(firsts.size() == 50);

  RandomStream inc({1, 0}, Substream::kIncrements), bridge({1, 0}, Substream::kBridge);
  CHECK(inc.uniform() != bridge.uniform());

  RandomStream u({9, 9});
  for (int i = 0; i < 10000; ++i) {
    const double v = u.uniform_positive();
    REQUIRE(v > 0.0);
    REQUIRE(v <= 1.0);
  }
}
