#include <bit>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "trajzoom/kernels.hpp"
#include "trajzoom/limit.hpp"
#include "trajzoom/random.hpp"
#include "trajzoom/sde.hpp"

using namespace trajzoom;
using namespace trajzoom::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  RandomStream rng({seed, 0});
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

std::vector<double> uniforms(std::size_t n, std::uint64_t seed) {
  RandomStream rng({seed, 1});
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform_positive();
  return v;
}

struct EmRun {
  std::vector<double> q, t, rq, rt;
  std::vector<std::uint64_t> clamped;
};

EmRun em_run(const KernelTable& k, std::size_t lanes, std::size_t steps) {
  EmRun r;
  RandomStream init({77, lanes});
  for (std::size_t i = 0; i < lanes; ++i) r.q.push_back(i % 5 == 0 ? 0.0 : init.uniform());
  r.t.assign(lanes, 0.0);
  r.clamped.assign(lanes, 0);
  r.rq.resize(lanes * steps);
  r.rt.resize(lanes * steps);
  const auto xi = normals(lanes * steps, 11 + lanes);
  EmCoefficients c{1.0 * 1e-3, 0.3, std::sqrt(400.0) * std::sqrt(1e-3), 400.0 * 1e-3};
  k.em_advance({r.q.data(), r.t.data(), r.clamped.data(), lanes}, xi.data(), steps, c, {r.rq.data(), r.rt.data()});
  return r;
}

struct ReflectRun {
  std::vector<double> x0, x, b, l, u, rx, rb, rl, ru;
  std::vector<std::size_t> cursor;
};

ReflectRun reflect_run(const KernelTable& k, std::size_t lanes, std::size_t steps, ReflectionScheme scheme,
                       Boundaries boundaries, double h) {
  ReflectRun r;
  for (std::size_t i = 0; i < lanes; ++i) r.x0.push_back(static_cast<double>(i % 4) / 3.0);
  r.x = r.x0;
  r.b.assign(lanes, 0.0);
  r.l.assign(lanes, 0.0);
  r.u.assign(lanes, 0.0);
  for (auto* v : {&r.rx, &r.rb, &r.rl, &r.ru}) v->resize(lanes * steps);
  const auto db = normals(lanes * steps, 5 + lanes, std::sqrt(h));
  const auto un = uniforms(lanes * steps, 6 + lanes);
  r.cursor.assign(lanes, 0);
  ReflectionParams p{scheme, boundaries, h, 8.0 * std::sqrt(h)};
  k.reflect_advance({r.x0.data(), r.x.data(), r.b.data(), r.l.data(), r.u.data(), lanes}, db.data(),
                    {un.data(), steps, r.cursor.data()}, steps, p, {r.rx.data(), r.rb.data(), r.rl.data(), r.ru.data()});
  return r;
}

}  // namespace

TEST_CASE("scalar is always available and listed first") {
  const auto isas = available_isas();
  REQUIRE(!isas.empty());
  CHECK(isas.front() == Isa::kScalar);
  CHECK(kernels_for(Isa::kScalar).isa == Isa::kScalar);
}

TEST_CASE("vector kernels are bit-identical to the scalar reference") {
  const KernelTable& ref = scalar_kernels();
  for (Isa isa : available_isas()) {
    if (isa == Isa::kScalar) continue;
    const KernelTable& k = kernels_for(isa);
    CAPTURE(to_string(isa));
    for (std::size_t lanes : {1u, 3u, 4u, 7u, 16u, 21u}) {
      CAPTURE(lanes);
      const auto a = em_run(ref, lanes, 300);
      const auto b = em_run(k, lanes, 300);
      CHECK(same_bits(a.q, b.q));
      CHECK(same_bits(a.t, b.t));
      CHECK(same_bits(a.rq, b.rq));
      CHECK(same_bits(a.rt, b.rt));
      CHECK(a.clamped == b.clamped);

      for (auto scheme : {ReflectionScheme::kClamp, ReflectionScheme::kBridge}) {
        for (auto bounds : {Boundaries::kBoth, Boundaries::kLowerOnly}) {
          const auto x = reflect_run(ref, lanes, 400, scheme, bounds, 0.01);
          const auto y = reflect_run(k, lanes, 400, scheme, bounds, 0.01);
          CHECK(same_bits(x.x, y.x));
          CHECK(same_bits(x.rx, y.rx));
          CHECK(same_bits(x.rb, y.rb));
          CHECK(same_bits(x.rl, y.rl));
          CHECK(same_bits(x.ru, y.ru));
          CHECK(x.cursor == y.cursor);
        }
      }
    }
    for (std::size_t n : {0u, 1u, 2u, 5u, 8u, 1001u}) {
      auto q = normals(n, 90 + n);
      for (double& v : q) v = 0.5 + 0.2 * v;
      CHECK(std::bit_cast<std::uint64_t>(ref.sum_squared_increments(q.data(), n)) ==
            std::bit_cast<std::uint64_t>(k.sum_squared_increments(q.data(), n)));
      CHECK(ref.count_in_window(q.data(), n, 0.4, 0.6) == k.count_in_window(q.data(), n, 0.4, 0.6));
      std::vector<double> o1(n), o2(n);
      ref.linear_entropy(q.data(), o1.data(), n);
      k.linear_entropy(q.data(), o2.data(), n);
      CHECK(same_bits(o1, o2));
    }
  }
}

TEST_CASE("scalar kernels against direct loops") {
  const KernelTable& ref = scalar_kernels();
  const std::vector<double> q{0.1, 0.4, 0.2, 0.9, 0.9, 0.5};
  double ss = 0.0;
  for (std::size_t i = 0; i + 1 < q.size(); ++i) ss += (q[i + 1] - q[i]) * (q[i + 1] - q[i]);
  CHECK(ref.sum_squared_increments(q.data(), q.size()) == doctest::Approx(ss).epsilon(1e-15));
  CHECK(ref.count_in_window(q.data(), q.size(), 0.2, 0.5) == 3);
  std::vector<double> s(q.size());
  ref.linear_entropy(q.data(), s.data(), q.size());
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(s[i] == doctest::Approx(2 * q[i] * (1 - q[i])));
}

TEST_CASE("bridge uniforms are drawn only near a boundary") {
  const auto r = reflect_run(scalar_kernels(), 4, 4000, ReflectionScheme::kBridge, Boundaries::kBoth, 1e-4);
  for (std::size_t used : r.cursor) {
    CHECK(used > 0);
    CHECK(used < 4000 / 2);
  }
  const auto c = reflect_run(scalar_kernels(), 4, 100, ReflectionScheme::kClamp, Boundaries::kBoth, 1e-4);
  for (std::size_t used : c.cursor) CHECK(used == 0);
}

TEST_CASE("reflection keeps the decomposition identity and the strip") {
  for (auto scheme : {ReflectionScheme::kClamp, ReflectionScheme::kBridge}) {
    const auto r = reflect_run(scalar_kernels(), 8, 2000, scheme, Boundaries::kBoth, 0.004);
    for (std::size_t k = 0; k < r.rx.size(); ++k) {
      const std::size_t lane = k % 8;
      REQUIRE(r.rx[k] >= 0.0);
      REQUIRE(r.rx[k] <= 1.0);
      REQUIRE(std::abs(r.rx[k] - (r.x0[lane] + r.rb[k] + r.rl[k] - r.ru[k])) <= 1e-12);
    }
  }
}

TEST_CASE("lane engines agree with single-trajectory runs") {
  ModelParams m;
  m.gamma = MeasurementRate::finite(200.0);
  m.ds = 1e-4;
  const auto single = run_sde(m, {3, 5}, 0.5);
  const std::vector<std::uint64_t> idx{4, 5, 6};
  const std::vector<double> q0(3, m.p);
  for (Isa isa : available_isas()) {
    SdeLanes lanes(m, 3, idx, q0, kernels_for(isa));
    lanes.advance(single.trajectory.size() - 1);
    CHECK(lanes.q()[1] == single.trajectory.q.back());
    CHECK(lanes.t()[1] == single.trajectory.t.back());
  }

  ModelParams lm;
  lm.gamma = MeasurementRate::infinite();
  lm.dt = 1e-3;
  for (auto scheme : {ReflectionScheme::kClamp, ReflectionScheme::kBridge}) {
    LimitOptions opt;
    opt.scheme = scheme;
    const auto batch = run_limit_batch(lm, 9, 10, 5, 2.0, opt);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto one = run_limit(lm, {9, 10 + i}, 2.0, opt);
      CHECK(one.q == batch[i].q);
      CHECK(one.big_l == batch[i].big_l);
      CHECK(one.big_u == batch[i].big_u);
    }
  }
}
