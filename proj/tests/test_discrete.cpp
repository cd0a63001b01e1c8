#include <cmath>

#include "doctest.h"
#include "trajzoom/discrete.hpp"

using namespace trajzoom;

namespace {

// B rho B^dagger for diagonal rho = diag(q, 1-q) and
// B = diag(sqrt(1 + s eps), sqrt(1 - s eps)) / sqrt(2), s = +-1.
struct Unnormalised {
  double ground;
  double excited;
};

Unnormalised apply_kraus(double q, double eps, int sign) {
  const double b00 = std::sqrt(1.0 + sign * eps) / std::sqrt(2.0);
  const double b11 = std::sqrt(1.0 - sign * eps) / std::sqrt(2.0);
  return {b00 * q * b00, b11 * (1.0 - q) * b11};
}

}  // namespace

TEST_CASE("relaxation") {
  CHECK(lindblad_relax(0.5, 3.0, 0.5, 0.7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lindblad_relax(1.0, 1.0, 0.5, std::log(2.0)) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(lindblad_relax(0.3, 1.0, 0.8, 1e3) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("kraus outcome probabilities and posteriors match the operator algebra") {
  for (double q : {0.0, 0.01, 0.1, 0.37, 0.5, 0.9, 1.0}) {
    for (double eps : {0.01, 0.1, 0.3, 0.7, 0.99}) {
      const auto pr = outcome_probabilities(q, eps);
      const auto plus = apply_kraus(q, eps, +1);
      const auto minus = apply_kraus(q, eps, -1);
      CHECK(pr.plus == doctest::Approx(plus.ground + plus.excited).epsilon(1e-14));
      CHECK(pr.minus == doctest::Approx(minus.ground + minus.excited).epsilon(1e-14));
      CHECK(std::abs(pr.plus + pr.minus - 1.0) <= 2e-16);
      CHECK(kraus_posterior(q, eps, Outcome::kPlus) ==
            doctest::Approx(plus.ground / (plus.ground + plus.excited)).epsilon(1e-14));
      CHECK(kraus_posterior(q, eps, Outcome::kMinus) ==
            doctest::Approx(minus.ground / (minus.ground + minus.excited)).epsilon(1e-14));
      const double mean = pr.plus * kraus_posterior(q, eps, Outcome::kPlus) +
                          pr.minus * kraus_posterior(q, eps, Outcome::kMinus);
      CHECK(std::abs(mean - q) <= 4e-16);
    }
  }
}

TEST_CASE("weak measurement examples") {
  const auto m = weak_measure(0.5, 0.3, 0.1);
  CHECK(m.outcome == Outcome::kPlus);
  CHECK(m.p_plus == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.q_post == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(weak_measure(0.5, 0.3, 0.9).outcome == Outcome::kMinus);
  for (double u : {0.01, 0.99}) {
    CHECK(weak_measure(0.0, 0.3, u).q_post == 0.0);
    CHECK(weak_measure(1.0, 0.3, u).q_post == 1.0);
  }
}

TEST_CASE("discrete effective time") {
  const std::vector<double> flat(5, 0.3);
  for (double t : discrete_effective_time(flat)) CHECK(t == 0.0);
  CHECK(discrete_effective_time(std::vector<double>{0.0, 1.0})[1] == 2.0);
  CHECK(discrete_effective_time(std::vector<double>{0.0, 1.0}, 1.0)[1] == 1.0);
  const auto t = discrete_effective_time(std::vector<double>{0.0, 0.5, 0.5, 1.0});
  CHECK(t == std::vector<double>{0.0, 0.5, 0.5, 1.0});
  CHECK_THROWS_AS(discrete_effective_time(std::vector<double>{0.0, 1.0}, 3.0), Error);
  CHECK_THROWS_AS(discrete_effective_time(std::vector<double>{0.0, 1.2}), Error);
}

TEST_CASE("run_discrete records are consistent with the path") {
  ModelParams m;
  m.epsilon = 0.05;
  m.ds = 1e-3;
  DiscreteOptions opt;
  opt.q0 = 0.3;
  const auto run = run_discrete(m, {5, 0}, 200, opt);
  const auto& tr = run.trajectory;
  REQUIRE(tr.size() == 201);
  REQUIRE(run.steps.size() == 200);
  CHECK(tr.q[0] == 0.3);
  CHECK_NOTHROW(check_invariants(tr, m.ds));
  CHECK(discrete_effective_time(tr.q, 2.0) == tr.t);
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    CHECK(run.steps[k].q_post == tr.q[k + 1]);
    CHECK(run.steps[k].dt_increment == doctest::Approx(tr.t[k + 1] - tr.t[k]).epsilon(1e-12));
  }
  // Weak measurement keeps q near its relaxation path over a short run.
  CHECK(std::abs(tr.q.back() - lindblad_relax(0.3, m.lambda, m.p, 0.2)) < 0.3);
  CHECK_THROWS_AS(run_discrete(m, {5, 0}, 0), Error);
  const auto again = run_discrete(m, {5, 0}, 200, opt);
  CHECK(again.trajectory.q == tr.q);
}

TEST_CASE("strong discrete monitoring pins q to the boundaries") {
  ModelParams m;
  m.epsilon = 0.3;
  m.ds = 1e-5;
  const auto run = run_discrete(m, {2024, 0}, 800000);
  std::size_t near = 0;
  for (double q : run.trajectory.q) near += (q <= 0.05 || q >= 0.95);
  CHECK(static_cast<double>(near) / run.trajectory.size() > 0.9);
}
