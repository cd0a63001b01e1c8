#pragma once

// The gamma -> infinity process in effective time: Brownian motion reflected
// at 0 and 1, Q = Q0 + B + L - U, with the physical clock rebuilt from the
// boundary local times, s(t) = L/(lambda p) + U/(lambda (1-p)).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trajzoom/kernels.hpp"
#include "trajzoom/model.hpp"
#include "trajzoom/random.hpp"

namespace trajzoom {

struct SkorokhodPair {
  std::vector<double> x;
  std::vector<double> l;
};

/// One-sided Skorokhod map on a grid: l[k] = max(0, -min_{j<=k} b[j] - x0),
/// x = x0 + b + l. Requires b[0] = 0 (kInvalidArgument) and x0 >= 0
/// (kNegativeStart).
SkorokhodPair skorokhod_map(std::span<const double> b, double x0);

struct StripReflection {
  std::vector<double> x;
  std::vector<double> l;
  std::vector<double> u;
};

/// Two-sided clamp recursion driven by the absolute path b: x[k+1] is
/// x0 + b[k+1] + l[k] - u[k] pushed back into [0,1], with the push added to
/// l or u. Throws kStartOutOfStrip unless x0 is in [0,1].
StripReflection reflect_strip(std::span<const double> b, double x0);

struct LimitOptions {
  kernels::ReflectionScheme scheme = kernels::ReflectionScheme::kClamp;
  kernels::Boundaries boundaries = kernels::Boundaries::kBoth;
  std::optional<double> q0;  // defaults to p
  bool keep_driving_path = true;
};

struct LimitTrajectory {
  double dt = 0.0;
  kernels::ReflectionScheme scheme = kernels::ReflectionScheme::kClamp;
  std::vector<double> t;
  std::vector<double> q;
  std::vector<double> big_l;
  std::vector<double> big_u;
  std::vector<double> b;  // empty when keep_driving_path is off
  std::vector<double> s_of_t;

  std::size_t size() const noexcept { return q.size(); }
};

/// Bridge-extremum distance beyond which a boundary is out of reach within
/// one step of size h (probability below exp(-32)).
double bridge_guard(double h);

kernels::ReflectionParams reflection_params(const LimitOptions& options, double dt);

/// ceil(horizon_t / dt) steps of sqrt(dt) xi, then reflection.
LimitTrajectory run_limit(const ModelParams& params, SeedSpec seed, double horizon_t,
                          const LimitOptions& options = {});

/// Reflected Brownian lanes in lock step. Lane i draws its normals from
/// (master_seed, indices[i], increments) and, under the bridge scheme, one
/// uniform per step from (master_seed, indices[i], bridge).
class LimitLanes {
 public:
  LimitLanes(double dt, const LimitOptions& options, std::uint64_t master_seed,
             std::span<const std::uint64_t> indices, std::span<const double> q0,
             const kernels::KernelTable& table = kernels::active_kernels());

  std::size_t lanes() const noexcept { return x_.size(); }
  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> b() const noexcept { return b_; }
  std::span<const double> l() const noexcept { return l_; }
  std::span<const double> u() const noexcept { return u_; }

  void advance(std::size_t steps, kernels::ReflectRecord record = {});

  /// Restarts lane i as a fresh trajectory with its own streams. Other lanes
  /// are unaffected, so results never depend on how trajectories are packed.
  void reset_lane(std::size_t lane, std::uint64_t index, double q0);

 private:
  const kernels::KernelTable* table_;
  kernels::ReflectionParams rp_;
  std::uint64_t master_seed_;
  double sqrt_dt_;
  std::vector<RandomStream> increments_;
  std::vector<RandomStream> bridge_;
  std::vector<double> x0_, x_, b_, l_, u_, db_;
  // Bridge uniforms per lane, drawn ahead only as far as the next block needs.
  std::vector<double> uniform_;
  std::vector<std::size_t> cursor_, filled_;
};

/// Runs `count` trajectories with indices first_index, first_index+1, ...
/// Entry i is bit-identical to run_limit with trajectory_index first_index+i.
std::vector<LimitTrajectory> run_limit_batch(const ModelParams& params, std::uint64_t master_seed,
                                             std::uint64_t first_index, std::size_t count, double horizon_t,
                                             const LimitOptions& options = {});

/// Occupation estimate of the local time at `level` (0 or 1):
/// (2 eps)^-1 sum_{t' <= t} 1{|q - level| <= eps} dt. The estimate at index k
/// counts samples 0..k-1, each weighted by one step.
std::vector<double> local_time_mollifier(std::span<const double> q, double dt, int level, double eps);

double physical_time(double big_l, double big_u, double lambda, double p);
std::vector<double> physical_time(std::span<const double> big_l, std::span<const double> big_u, double lambda,
                                  double p);

/// Right-continuous inverse: the first t[k] with s_of_t[k] > s_query.
/// Throws kHorizonExceeded when no grid point qualifies.
double inverse_time_change(std::span<const double> t, std::span<const double> s_of_t, double s_query);
std::optional<double> try_inverse_time_change(std::span<const double> t, std::span<const double> s_of_t,
                                              double s_query);

/// Remaining effective time for a one-sided reflected path at position x with
/// local time ell to push its local time up to `target`: the first-passage
/// time of Brownian motion over distance x + target - ell, d^2 / Z^2.
double sample_remaining_passage(double x, double ell, double target, RandomStream& rng);

}  // namespace trajzoom
