#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trajzoom/error.hpp"

namespace trajzoom {

/// Measurement rate: either a finite positive number or the distinguished
/// infinite marker used by the limit engine. Never a floating-point inf.
class MeasurementRate {
 public:
  enum class Kind { kFinite, kInfinite };

  static MeasurementRate finite(double value) { return MeasurementRate(Kind::kFinite, value); }
  static MeasurementRate infinite() { return MeasurementRate(Kind::kInfinite, 0.0); }

  Kind kind() const noexcept { return kind_; }
  bool is_infinite() const noexcept { return kind_ == Kind::kInfinite; }
  /// Throws kInconsistent when called on the infinite marker.
  double value() const;

  friend bool operator==(const MeasurementRate&, const MeasurementRate&) = default;

 private:
  MeasurementRate(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_;
  double value_;
};

struct ModelParams {
  double lambda = 1.0;  // thermal relaxation rate
  double p = 0.5;       // equilibrium ground-state population
  MeasurementRate gamma = MeasurementRate::finite(200.0);
  double epsilon = 0.3;  // weak-measurement strength
  double ds = 1e-5;      // real-time step
  double dt = 1e-4;      // effective-time step

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Which engine the parameters are destined for. kAny checks only the field
/// ranges; the others also check the gamma kind.
enum class Regime { kAny, kDiscrete, kFiniteRate, kLimit };

/// Returns `params` unchanged when every invariant holds, otherwise throws
/// kOutOfRange naming the field, or kInconsistent for a gamma kind mismatch.
ModelParams validate(const ModelParams& params, Regime regime = Regime::kAny);

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_index = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// A path of Q sampled on a uniform real-time grid, with cumulative
/// effective time.
struct Trajectory {
  std::vector<double> s;
  std::vector<double> q;
  std::vector<double> t;

  std::size_t size() const noexcept { return q.size(); }
};

/// Throws kOutOfRange if q leaves [0,1], t is not non-decreasing from 0, or
/// s is not strictly increasing with spacing ds (relative tolerance 1e-9).
void check_invariants(const Trajectory& traj, double ds);

}  // namespace trajzoom
