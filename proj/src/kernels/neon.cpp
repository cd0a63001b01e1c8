// NEON variants for aarch64. Advanced SIMD is architectural on aarch64, so
// availability is decided at compile time.

#include "kernels/scalar.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include "kernels/lane_ops.hpp"

namespace trajzoom::kernels::neon {
namespace {

constexpr std::size_t kWidth = 2;

void em_advance(EmLanes state, const double* xi, std::size_t steps, const EmCoefficients& c,
                EmRecord record) {
  const std::size_t n = state.lanes;
  const std::size_t full = n - n % kWidth;
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t lambda_ds = vdupq_n_f64(c.lambda_ds);
  const float64x2_t p = vdupq_n_f64(c.p);
  const float64x2_t sqrt_gamma_ds = vdupq_n_f64(c.sqrt_gamma_ds);
  const float64x2_t gamma_ds = vdupq_n_f64(c.gamma_ds);
  for (std::size_t i = 0; i < full; i += kWidth) {
    float64x2_t q = vld1q_f64(state.q + i);
    float64x2_t t = vld1q_f64(state.t + i);
    uint64x2_t clamped = vld1q_u64(state.clamped + i);
    for (std::size_t k = 0; k < steps; ++k) {
      const float64x2_t x = vld1q_f64(xi + k * n + i);
      const float64x2_t w = vmulq_f64(q, vsubq_f64(one, q));
      t = vaddq_f64(t, vmulq_f64(gamma_ds, vmulq_f64(w, w)));
      float64x2_t y = vaddq_f64(vaddq_f64(q, vmulq_f64(lambda_ds, vsubq_f64(p, q))), vmulq_f64(vmulq_f64(sqrt_gamma_ds, w), x));
      const uint64x2_t below = vcltq_f64(y, zero);
      const uint64x2_t above = vcgtq_f64(y, one);
      y = vbslq_f64(below, zero, y);
      y = vbslq_f64(above, one, y);
      clamped = vsubq_u64(clamped, vreinterpretq_u64_s64(vreinterpretq_s64_u64(vorrq_u64(below, above))));
      q = y;
      if (record.q != nullptr) vst1q_f64(record.q + k * n + i, q);
      if (record.t != nullptr) vst1q_f64(record.t + k * n + i, t);
    }
    vst1q_f64(state.q + i, q);
    vst1q_f64(state.t + i, t);
    vst1q_u64(state.clamped + i, clamped);
  }
  for (std::size_t i = full; i < n; ++i) {
    for (std::size_t k = 0; k < steps; ++k) {
      state.q[i] = em_update(state.q[i], xi[k * n + i], c, state.t[i], state.clamped[i]);
      if (record.q != nullptr) record.q[k * n + i] = state.q[i];
      if (record.t != nullptr) record.t[k * n + i] = state.t[i];
    }
  }
}

void reflect_advance(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                     const ReflectionParams& rp, ReflectRecord record) {
  // The bridge scheme is branch-heavy near the boundaries; only the clamp
  // scheme is vectorised here.
  if (rp.scheme == ReflectionScheme::kBridge) {
    scalar::reflect_lanes_scalar(state, db, uniforms, steps, rp, record, 0);
    return;
  }
  const std::size_t n = state.lanes;
  const std::size_t full = n - n % kWidth;
  const bool both = rp.boundaries == Boundaries::kBoth;
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < full; i += kWidth) {
    const float64x2_t x0 = vld1q_f64(state.x0 + i);
    float64x2_t x = vld1q_f64(state.x + i);
    float64x2_t b = vld1q_f64(state.b + i);
    float64x2_t l = vld1q_f64(state.l + i);
    float64x2_t u = vld1q_f64(state.u + i);
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t at = k * n + i;
      b = vaddq_f64(b, vld1q_f64(db + at));
      const float64x2_t y = vsubq_f64(vaddq_f64(vaddq_f64(x0, b), l), u);
      l = vaddq_f64(l, vbslq_f64(vcltq_f64(y, zero), vnegq_f64(y), zero));
      u = vaddq_f64(u, both ? vbslq_f64(vcgtq_f64(y, one), vsubq_f64(y, one), zero) : zero);
      float64x2_t xn = vsubq_f64(vaddq_f64(vaddq_f64(x0, b), l), u);
      xn = vbslq_f64(vcltq_f64(xn, zero), zero, xn);
      if (both) xn = vbslq_f64(vcgtq_f64(xn, one), one, xn);
      x = xn;
      if (record.x != nullptr) vst1q_f64(record.x + at, x);
      if (record.b != nullptr) vst1q_f64(record.b + at, b);
      if (record.l != nullptr) vst1q_f64(record.l + at, l);
      if (record.u != nullptr) vst1q_f64(record.u + at, u);
    }
    vst1q_f64(state.x + i, x);
    vst1q_f64(state.b + i, b);
    vst1q_f64(state.l + i, l);
    vst1q_f64(state.u + i, u);
  }
  if (full < n) scalar::reflect_lanes_scalar(state, db, uniforms, steps, rp, record, full);
}

double sum_squared_increments(const double* q, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  // Two registers hold the four interleaved partial sums of the reference order.
  float64x2_t acc01 = vdupq_n_f64(0.0);
  float64x2_t acc23 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const float64x2_t d01 = vsubq_f64(vld1q_f64(q + i + 1), vld1q_f64(q + i));
    const float64x2_t d23 = vsubq_f64(vld1q_f64(q + i + 3), vld1q_f64(q + i + 2));
    acc01 = vaddq_f64(acc01, vmulq_f64(d01, d01));
    acc23 = vaddq_f64(acc23, vmulq_f64(d23, d23));
  }
  double lanes[4];
  vst1q_f64(lanes, acc01);
  vst1q_f64(lanes + 2, acc23);
  for (; i < m; ++i) {
    const double d = q[i + 1] - q[i];
    lanes[i % 4] = lanes[i % 4] + d * d;
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

std::size_t count_in_window(const double* q, std::size_t n, double lo, double hi) {
  const float64x2_t vlo = vdupq_n_f64(lo);
  const float64x2_t vhi = vdupq_n_f64(hi);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t v = vld1q_f64(q + i);
    const uint64x2_t in = vandq_u64(vcgeq_f64(v, vlo), vcleq_f64(v, vhi));
    count += static_cast<std::size_t>(vgetq_lane_u64(in, 0) & 1U) + static_cast<std::size_t>(vgetq_lane_u64(in, 1) & 1U);
  }
  for (; i < n; ++i) count += (q[i] >= lo && q[i] <= hi) ? 1 : 0;
  return count;
}

void linear_entropy(const double* q, double* out, std::size_t n) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t two = vdupq_n_f64(2.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const float64x2_t v = vld1q_f64(q + i);
    vst1q_f64(out + i, vmulq_f64(two, vmulq_f64(v, vsubq_f64(one, v))));
  }
  for (; i < n; ++i) out[i] = 2.0 * (q[i] * (1.0 - q[i]));
}

const KernelTable kTable{
    Isa::kNeon, &em_advance, &reflect_advance, &sum_squared_increments, &count_in_window, &linear_entropy,
};

}  // namespace

const KernelTable* table() { return &kTable; }

}  // namespace trajzoom::kernels::neon

#else

namespace trajzoom::kernels::neon {
const KernelTable* table() { return nullptr; }
}  // namespace trajzoom::kernels::neon

#endif
