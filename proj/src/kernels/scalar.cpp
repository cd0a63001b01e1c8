#include "kernels/scalar.hpp"

#include "kernels/lane_ops.hpp"

namespace trajzoom::kernels::scalar {

void em_advance(EmLanes state, const double* xi, std::size_t steps, const EmCoefficients& c,
                EmRecord record) {
  const std::size_t n = state.lanes;
  for (std::size_t k = 0; k < steps; ++k) {
    const double* xk = xi + k * n;
    for (std::size_t i = 0; i < n; ++i) {
      state.q[i] = em_update(state.q[i], xk[i], c, state.t[i], state.clamped[i]);
    }
    if (record.q != nullptr) {
      for (std::size_t i = 0; i < n; ++i) record.q[k * n + i] = state.q[i];
    }
    if (record.t != nullptr) {
      for (std::size_t i = 0; i < n; ++i) record.t[k * n + i] = state.t[i];
    }
  }
}

void reflect_lanes_scalar(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                          const ReflectionParams& params, ReflectRecord record, std::size_t first_lane) {
  const std::size_t n = state.lanes;
  for (std::size_t i = first_lane; i < n; ++i) {
    LaneState s{state.x0[i], state.x[i], state.b[i], state.l[i], state.u[i]};
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t at = k * n + i;
      reflect_update(s, db[at], uniforms, i, params);
      if (record.x != nullptr) record.x[at] = s.x;
      if (record.b != nullptr) record.b[at] = s.b;
      if (record.l != nullptr) record.l[at] = s.l;
      if (record.u != nullptr) record.u[at] = s.u;
    }
    state.x[i] = s.x;
    state.b[i] = s.b;
    state.l[i] = s.l;
    state.u[i] = s.u;
  }
}

void reflect_advance(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                     const ReflectionParams& params, ReflectRecord record) {
  reflect_lanes_scalar(state, db, uniforms, steps, params, record, 0);
}

double sum_squared_increments(const double* q, std::size_t n) {
  if (n < 2) return 0.0;
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t m = n - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = q[i + 1] - q[i];
    acc[i % 4] = acc[i % 4] + d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

std::size_t count_in_window(const double* q, std::size_t n, double lo, double hi) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) count += (q[i] >= lo && q[i] <= hi) ? 1 : 0;
  return count;
}

void linear_entropy(const double* q, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * (q[i] * (1.0 - q[i]));
}

}  // namespace trajzoom::kernels::scalar
