#include <cmath>

#include "doctest.h"
#include "trajzoom/sde.hpp"

using namespace trajzoom;

namespace {

ModelParams fig2(double ds = 1e-5) {
  ModelParams m;
  m.lambda = 1.0;
  m.p = 0.5;
  m.gamma = MeasurementRate::finite(200.0);
  m.ds = ds;
  return m;
}

}  // namespace

TEST_CASE("euler-maruyama step arithmetic") {
  ModelParams m = fig2();
  m.gamma = MeasurementRate::finite(0.0);
  CHECK(em_step(0.3, m, 2.5) == doctest::Approx(0.3 + 1.0 * (0.5 - 0.3) * 1e-5).epsilon(1e-15));
  m = fig2();
  CHECK(em_step(0.0, m, -3.0) == doctest::Approx(5e-6).epsilon(1e-12));
  CHECK(em_step(0.5, m, 1.0) == doctest::Approx(0.5 + std::sqrt(200.0) * 0.25 * std::sqrt(1e-5)).epsilon(1e-14));
  CHECK(em_step(0.5, m, 1.0) == doctest::Approx(0.511180).epsilon(1e-6));
  CHECK(em_step(0.99, m, 400.0) == 1.0);
}

TEST_CASE("step guard and preconditions") {
  ModelParams m = fig2(1e-3);
  CHECK_THROWS_AS(check_step_guard(m), Error);
  CHECK_NOTHROW(check_step_guard(fig2(5e-4)));
  CHECK_THROWS_AS(run_sde(fig2(), {1, 0}, 0.0), Error);
  ModelParams inf = fig2();
  inf.gamma = MeasurementRate::infinite();
  CHECK_THROWS_AS(run_sde(inf, {1, 0}, 1.0), Error);
}

TEST_CASE("run_sde produces a valid, reproducible path") {
  const auto a = run_sde(fig2(), {42, 0}, 0.5);
  const auto b = run_sde(fig2(), {42, 0}, 0.5);
  REQUIRE(a.trajectory.size() == 50001);
  CHECK(a.trajectory.q == b.trajectory.q);
  CHECK_NOTHROW(check_invariants(a.trajectory, 1e-5));
  REQUIRE(a.increments_w.size() == 50000);
  // The path is the recurrence driven by the recorded normals.
  double q = a.trajectory.q[0];
  for (std::size_t k = 0; k < 1000; ++k) {
    q = em_step(q, fig2(), a.increments_w[k]);
    REQUIRE(q == a.trajectory.q[k + 1]);
  }
  // Effective time from the integral form, accumulated from the pre-step value.
  double t = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const double w = a.trajectory.q[k] * (1.0 - a.trajectory.q[k]);
    t += 200.0 * w * w * 1e-5;
  }
  CHECK(a.trajectory.t[1000] == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("effective-time estimators converge and clamping fades as ds shrinks") {
  double rel_coarse = 0.0, rel_fine = 0.0;
  double clamp_coarse = 0.0, clamp_fine = 0.0;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto c = run_sde(fig2(5e-4), {8, i}, 5.0, {.q0 = 0.5, .keep_increments = false});
    const auto f = run_sde(fig2(1e-5), {8, i}, 5.0, {.q0 = 0.5, .keep_increments = false});
    rel_coarse += std::abs(quadratic_variation_time(c.trajectory) / c.trajectory.t.back() - 1.0);
    rel_fine += std::abs(quadratic_variation_time(f.trajectory) / f.trajectory.t.back() - 1.0);
    clamp_coarse += static_cast<double>(c.clamped_steps) / static_cast<double>(c.trajectory.size() - 1);
    clamp_fine += static_cast<double>(f.clamped_steps) / static_cast<double>(f.trajectory.size() - 1);
  }
  CHECK(rel_fine < rel_coarse);
  CHECK(rel_fine / 4 < 0.05);
  CHECK(clamp_fine < clamp_coarse);
}

TEST_CASE("reparametrization by effective time") {
  Trajectory tr{{0.0, 0.1, 0.2}, {0.2, 0.4, 0.6}, {0.0, 1.0, 2.0}};
  const auto e = reparametrize(tr, 1.0);
  CHECK(e.q == std::vector<double>{0.2, 0.4, 0.6});
  CHECK(e.t == std::vector<double>{0.0, 1.0, 2.0});
  CHECK(!e.degenerate_time);

  Trajectory flat{{0.0, 0.1, 0.2}, {0.3, 0.3, 0.3}, {0.0, 0.0, 0.0}};
  const auto d = reparametrize(flat, 0.5);
  CHECK(d.degenerate_time);
  CHECK(d.q.size() == 1);

  Trajectory uneven{{0.0, 0.1, 0.2, 0.3}, {0.1, 0.2, 0.3, 0.4}, {0.0, 0.25, 1.5, 1.75}};
  const auto u = reparametrize(uneven, 0.5);
  CHECK(u.q == std::vector<double>{0.1, 0.2, 0.2, 0.3});
  CHECK(u.s == std::vector<double>{0.0, 0.1, 0.1, 0.2});
}

TEST_CASE("reparametrized paths diffuse with unit rate in the bulk") {
  // Variance of Q increments over an effective-time lag, for increments that
  // start in [0.2, 0.8]; fitted slope through the origin.
  const double grid = 5e-4;
  const std::vector<double> lags{0.002, 0.004, 0.008};
  std::vector<double> sum(lags.size()), sum2(lags.size()), count(lags.size());
  for (std::uint64_t i = 0; i < 3; ++i) {
    const auto path = run_sde(fig2(2.5e-5), {31, i}, 40.0, {.q0 = 0.5, .keep_increments = false});
    const auto e = reparametrize(path.trajectory, grid);
    for (std::size_t j = 0; j < lags.size(); ++j) {
      const auto step = static_cast<std::size_t>(std::lround(lags[j] / grid));
      for (std::size_t k = 0; k + step < e.q.size(); k += step) {
        if (e.q[k] < 0.2 || e.q[k] > 0.8) continue;
        const double d = e.q[k + step] - e.q[k];
        sum[j] += d;
        sum2[j] += d * d;
        count[j] += 1.0;
      }
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < lags.size(); ++j) {
    REQUIRE(count[j] > 1000);
    const double var = sum2[j] / count[j] - (sum[j] / count[j]) * (sum[j] / count[j]);
    num += var * lags[j];
    den += lags[j] * lags[j];
  }
  const double slope = num / den;
  CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
}
