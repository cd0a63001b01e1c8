// AVX2 variants. Compiled with -mavx2 only (no -mfma); selected at runtime
// after a CPUID check.

#include "kernels/scalar.hpp"

#if defined(TRAJZOOM_HAVE_AVX2)

#include <immintrin.h>

#include <bit>

#include "kernels/lane_ops.hpp"

namespace trajzoom::kernels::avx2 {
namespace {

constexpr std::size_t kWidth = 4;

void em_advance(EmLanes state, const double* xi, std::size_t steps, const EmCoefficients& c,
                EmRecord record) {
  const std::size_t n = state.lanes;
  const std::size_t full = n - n % kWidth;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d lambda_ds = _mm256_set1_pd(c.lambda_ds);
  const __m256d p = _mm256_set1_pd(c.p);
  const __m256d sqrt_gamma_ds = _mm256_set1_pd(c.sqrt_gamma_ds);
  const __m256d gamma_ds = _mm256_set1_pd(c.gamma_ds);

  for (std::size_t i = 0; i < full; i += kWidth) {
    __m256d q = _mm256_loadu_pd(state.q + i);
    __m256d t = _mm256_loadu_pd(state.t + i);
    __m256i clamped = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(state.clamped + i));
    for (std::size_t k = 0; k < steps; ++k) {
      const __m256d x = _mm256_loadu_pd(xi + k * n + i);
      const __m256d w = _mm256_mul_pd(q, _mm256_sub_pd(one, q));
      t = _mm256_add_pd(t, _mm256_mul_pd(gamma_ds, _mm256_mul_pd(w, w)));
      __m256d y = _mm256_add_pd(_mm256_add_pd(q, _mm256_mul_pd(lambda_ds, _mm256_sub_pd(p, q))),
                                _mm256_mul_pd(_mm256_mul_pd(sqrt_gamma_ds, w), x));
      const __m256d below = _mm256_cmp_pd(y, zero, _CMP_LT_OQ);
      const __m256d above = _mm256_cmp_pd(y, one, _CMP_GT_OQ);
      y = _mm256_blendv_pd(y, zero, below);
      y = _mm256_blendv_pd(y, one, above);
      clamped = _mm256_sub_epi64(clamped, _mm256_castpd_si256(_mm256_or_pd(below, above)));
      q = y;
      if (record.q != nullptr) _mm256_storeu_pd(record.q + k * n + i, q);
      if (record.t != nullptr) _mm256_storeu_pd(record.t + k * n + i, t);
    }
    _mm256_storeu_pd(state.q + i, q);
    _mm256_storeu_pd(state.t + i, t);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(state.clamped + i), clamped);
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
  const std::size_t n = state.lanes;
  const std::size_t full = n - n % kWidth;
  const bool both = rp.boundaries == Boundaries::kBoth;
  const bool bridge = rp.scheme == ReflectionScheme::kBridge;
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d guard = _mm256_set1_pd(rp.bridge_guard);
  const __m256d sign = _mm256_set1_pd(-0.0);

  for (std::size_t i = 0; i < full; i += kWidth) {
    const __m256d x0 = _mm256_loadu_pd(state.x0 + i);
    __m256d x = _mm256_loadu_pd(state.x + i);
    __m256d b = _mm256_loadu_pd(state.b + i);
    __m256d l = _mm256_loadu_pd(state.l + i);
    __m256d u = _mm256_loadu_pd(state.u + i);
    for (std::size_t k = 0; k < steps; ++k) {
      const std::size_t at = k * n + i;
      const __m256d step = _mm256_loadu_pd(db + at);
      const __m256d b_new = _mm256_add_pd(b, step);
      const __m256d y = _mm256_sub_pd(_mm256_add_pd(_mm256_add_pd(x0, b_new), l), u);
      bool fallback = false;
      if (bridge) {
        const __m256d below = _mm256_cmp_pd(y, zero, _CMP_LT_OQ);
        __m256d need;
        if (both) {
          const __m256d lower_side = _mm256_cmp_pd(x, half, _CMP_LT_OQ);
          const __m256d near_lo = _mm256_or_pd(_mm256_cmp_pd(x, guard, _CMP_LT_OQ), below);
          const __m256d near_hi = _mm256_or_pd(_mm256_cmp_pd(_mm256_sub_pd(one, x), guard, _CMP_LT_OQ),
                                               _mm256_cmp_pd(y, one, _CMP_GT_OQ));
          need = _mm256_blendv_pd(near_hi, near_lo, lower_side);
        } else {
          need = _mm256_or_pd(_mm256_cmp_pd(x, guard, _CMP_LT_OQ), below);
        }
        fallback = _mm256_movemask_pd(need) != 0;
      }
      if (fallback) {
        alignas(32) double xs[kWidth], bs[kWidth], ls[kWidth], us[kWidth], x0s[kWidth];
        _mm256_store_pd(xs, x);
        _mm256_store_pd(bs, b);
        _mm256_store_pd(ls, l);
        _mm256_store_pd(us, u);
        _mm256_store_pd(x0s, x0);
        for (std::size_t j = 0; j < kWidth; ++j) {
          LaneState s{x0s[j], xs[j], bs[j], ls[j], us[j]};
          reflect_update(s, db[at + j], uniforms, i + j, rp);
          xs[j] = s.x;
          bs[j] = s.b;
          ls[j] = s.l;
          us[j] = s.u;
        }
        x = _mm256_load_pd(xs);
        b = _mm256_load_pd(bs);
        l = _mm256_load_pd(ls);
        u = _mm256_load_pd(us);
      } else {
        b = b_new;
        if (!bridge) {
          const __m256d dl = _mm256_blendv_pd(zero, _mm256_xor_pd(y, sign), _mm256_cmp_pd(y, zero, _CMP_LT_OQ));
          l = _mm256_add_pd(l, dl);
          if (both) {
            const __m256d du = _mm256_blendv_pd(zero, _mm256_sub_pd(y, one), _mm256_cmp_pd(y, one, _CMP_GT_OQ));
            u = _mm256_add_pd(u, du);
          } else {
            u = _mm256_add_pd(u, zero);
          }
        } else {
          l = _mm256_add_pd(l, zero);
          u = _mm256_add_pd(u, zero);
        }
        __m256d xn = _mm256_sub_pd(_mm256_add_pd(_mm256_add_pd(x0, b), l), u);
        xn = _mm256_blendv_pd(xn, zero, _mm256_cmp_pd(xn, zero, _CMP_LT_OQ));
        if (both) xn = _mm256_blendv_pd(xn, one, _mm256_cmp_pd(xn, one, _CMP_GT_OQ));
        x = xn;
      }
      if (record.x != nullptr) _mm256_storeu_pd(record.x + at, x);
      if (record.b != nullptr) _mm256_storeu_pd(record.b + at, b);
      if (record.l != nullptr) _mm256_storeu_pd(record.l + at, l);
      if (record.u != nullptr) _mm256_storeu_pd(record.u + at, u);
    }
    _mm256_storeu_pd(state.x + i, x);
    _mm256_storeu_pd(state.b + i, b);
    _mm256_storeu_pd(state.l + i, l);
    _mm256_storeu_pd(state.u + i, u);
  }
  if (full < n) scalar::reflect_lanes_scalar(state, db, uniforms, steps, rp, record, full);
}

double sum_squared_increments(const double* q, std::size_t n) {
  if (n < 2) return 0.0;
  const std::size_t m = n - 1;
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kWidth <= m; i += kWidth) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(q + i + 1), _mm256_loadu_pd(q + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) double lanes[kWidth];
  _mm256_store_pd(lanes, acc);
  for (; i < m; ++i) {
    const double d = q[i + 1] - q[i];
    lanes[i % kWidth] = lanes[i % kWidth] + d * d;
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

std::size_t count_in_window(const double* q, std::size_t n, double lo, double hi) {
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vhi = _mm256_set1_pd(hi);
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d v = _mm256_loadu_pd(q + i);
    const __m256d in = _mm256_and_pd(_mm256_cmp_pd(v, vlo, _CMP_GE_OQ), _mm256_cmp_pd(v, vhi, _CMP_LE_OQ));
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_pd(in))));
  }
  for (; i < n; ++i) count += (q[i] >= lo && q[i] <= hi) ? 1 : 0;
  return count;
}

void linear_entropy(const double* q, double* out, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  std::size_t i = 0;
  for (; i + kWidth <= n; i += kWidth) {
    const __m256d v = _mm256_loadu_pd(q + i);
    _mm256_storeu_pd(out + i, _mm256_mul_pd(two, _mm256_mul_pd(v, _mm256_sub_pd(one, v))));
  }
  for (; i < n; ++i) out[i] = 2.0 * (q[i] * (1.0 - q[i]));
}

const KernelTable kTable{
    Isa::kAvx2, &em_advance, &reflect_advance, &sum_squared_increments, &count_in_window, &linear_entropy,
};

}  // namespace

const KernelTable* table() { return &kTable; }

}  // namespace trajzoom::kernels::avx2

#else

namespace trajzoom::kernels::avx2 {
const KernelTable* table() { return nullptr; }
}  // namespace trajzoom::kernels::avx2

#endif
