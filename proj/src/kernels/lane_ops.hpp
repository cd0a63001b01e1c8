#pragma once

// Per-lane step functions shared by every kernel variant. The vector kernels
// fall back to these for remainder lanes and for rare branchy steps, which is
// what keeps all variants bit-identical.
//
// Internal linkage on purpose: this header is compiled into translation units
// with different target flags, and merged inline copies could leak AVX2
// encodings into the scalar path.

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "trajzoom/kernels.hpp"

namespace trajzoom::kernels {
namespace {

inline double em_update(double q, double xi, const EmCoefficients& c, double& t, std::uint64_t& clamped) {
  const double w = q * (1.0 - q);
  t = t + c.gamma_ds * (w * w);
  double y = (q + c.lambda_ds * (c.p - q)) + (c.sqrt_gamma_ds * w) * xi;
  if (y < 0.0) {
    y = 0.0;
    ++clamped;
  } else if (y > 1.0) {
    y = 1.0;
    ++clamped;
  }
  return y;
}

/// Lower extremum of a Brownian bridge from 0 to db over time h, sampled by
/// inverting P(min <= m) = exp(-2 m (m - db) / h). u is uniform on (0,1].
inline double bridge_min(double db, double h, double u) {
  return 0.5 * (db - std::sqrt(db * db - 2.0 * h * std::log(u)));
}

inline double bridge_max(double db, double h, double u) {
  return 0.5 * (db + std::sqrt(db * db - 2.0 * h * std::log(u)));
}

struct LaneState {
  double x0, x, b, l, u;
};

inline double next_uniform(const BridgeUniforms& q, std::size_t lane) {
  if (q.values == nullptr) return 1.0;
  return q.values[lane * q.stride + q.cursor[lane]++];
}

inline void reflect_update(LaneState& s, double db, const BridgeUniforms& uniforms, std::size_t lane,
                           const ReflectionParams& rp) {
  const bool both = rp.boundaries == Boundaries::kBoth;
  const double xk = s.x;
  s.b = s.b + db;
  const double y = ((s.x0 + s.b) + s.l) - s.u;
  double dl = 0.0;
  double du = 0.0;
  if (rp.scheme == ReflectionScheme::kClamp) {
    if (y < 0.0) dl = -y;
    if (both && y > 1.0) du = y - 1.0;
  } else {
    const bool lower_side = !both || xk < 0.5;
    if (lower_side) {
      if (xk < rp.bridge_guard || y < 0.0) {
        const double reach = xk + bridge_min(db, rp.bridge_step, next_uniform(uniforms, lane));
        if (reach < 0.0) dl = -reach;
      }
    } else if ((1.0 - xk) < rp.bridge_guard || y > 1.0) {
      const double reach = xk + bridge_max(db, rp.bridge_step, next_uniform(uniforms, lane));
      if (reach > 1.0) du = reach - 1.0;
    }
  }
  s.l = s.l + dl;
  s.u = s.u + du;
  double x = ((s.x0 + s.b) + s.l) - s.u;
  if (x < 0.0) x = 0.0;
  if (both && x > 1.0) x = 1.0;
  s.x = x;
}

}  // namespace
}  // namespace trajzoom::kernels
