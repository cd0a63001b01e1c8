#pragma once

// Data-parallel inner loops shared by the engines.
//
// Every kernel has a scalar reference implementation and, where the target
// supports it, a vector implementation selected at runtime. Lane-parallel
// kernels advance several independent trajectories in lock step (structure of
// arrays, lane index fastest). Vector variants perform exactly the same IEEE
// operations in the same order as the scalar reference, so results are
// bit-identical; reductions use a fixed four-way interleaved summation order
// for the same reason.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace trajzoom::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

/// Coefficients of one Euler-Maruyama step of dQ = lambda(p-Q)ds + sqrt(gamma) Q(1-Q) dW.
struct EmCoefficients {
  double lambda_ds = 0.0;      // lambda * ds
  double p = 0.5;
  double sqrt_gamma_ds = 0.0;  // sqrt(gamma) * sqrt(ds)
  double gamma_ds = 0.0;       // gamma * ds, effective-time rate factor
};

/// Lane state of the real-time SDE. `t` accumulates gamma q^2 (1-q)^2 ds using
/// the pre-step value; `clamped` counts steps that left [0,1].
struct EmLanes {
  double* q;
  double* t;
  std::uint64_t* clamped;
  std::size_t lanes;
};

enum class ReflectionScheme {
  kClamp,   // per-step clamp of x + db into [0,1]
  kBridge,  // exact Skorokhod push of the Brownian bridge inside each step
};

enum class Boundaries { kBoth, kLowerOnly };

/// Reflection parameters. `bridge_step` is the effective-time step h used by
/// the bridge extremum law; `bridge_guard` is the distance beyond which the
/// bridge cannot reach a boundary with any representable probability.
struct ReflectionParams {
  ReflectionScheme scheme = ReflectionScheme::kClamp;
  Boundaries boundaries = Boundaries::kBoth;
  double bridge_step = 0.0;
  double bridge_guard = 0.0;
};

/// Lane state of the reflected Brownian motion. The invariant
/// x = x0 + b + l - u holds to rounding after every step because x is
/// recomputed from the cumulative sums rather than updated incrementally.
struct ReflectLanes {
  const double* x0;
  double* x;
  double* b;
  double* l;
  double* u;
  std::size_t lanes;
};

/// Per-step outputs, each laid out [step * lanes + lane]. Null pointers skip.
struct ReflectRecord {
  double* x = nullptr;
  double* b = nullptr;
  double* l = nullptr;
  double* u = nullptr;
};

/// Per-lane queues of uniforms on (0,1] for the bridge scheme. Lane i reads
/// values[i * stride + cursor[i]] and advances its cursor only on steps that
/// sample a bridge extremum, so draws are spent only near a boundary. At
/// least `steps` unread values per lane must be available.
struct BridgeUniforms {
  const double* values = nullptr;  // null: every extremum is the step endpoint
  std::size_t stride = 0;
  std::size_t* cursor = nullptr;
};

struct EmRecord {
  double* q = nullptr;
  double* t = nullptr;
};

struct KernelTable {
  Isa isa;

  /// Advances every lane `steps` times. xi is [step * lanes + lane].
  void (*em_advance)(EmLanes state, const double* xi, std::size_t steps, const EmCoefficients& c,
                     EmRecord record);

  /// Advances every lane `steps` times with increments db. Only the bridge
  /// scheme reads `uniforms`.
  void (*reflect_advance)(ReflectLanes state, const double* db, BridgeUniforms uniforms, std::size_t steps,
                          const ReflectionParams& params, ReflectRecord record);

  /// Sum of (q[i+1]-q[i])^2.
  double (*sum_squared_increments)(const double* q, std::size_t n);

  /// Number of entries with lo <= q[i] <= hi.
  std::size_t (*count_in_window)(const double* q, std::size_t n, double lo, double hi);

  /// out[i] = 2 q[i] (1 - q[i]).
  void (*linear_entropy)(const double* q, double* out, std::size_t n);
};

const KernelTable& scalar_kernels();

/// Kernel tables compiled into this binary and supported by the running CPU,
/// scalar first.
std::vector<Isa> available_isas();
const KernelTable& kernels_for(Isa isa);

/// The table used by the engines: the best available ISA, unless the
/// environment variable TRAJZOOM_SIMD names another one (scalar, avx2, neon).
const KernelTable& active_kernels();

}  // namespace trajzoom::kernels
