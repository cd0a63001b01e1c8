#pragma once

// Euler-Maruyama integration of the monitored-qubit SDE at finite gamma,
//   dQ = lambda (p - Q) ds + sqrt(gamma) Q (1 - Q) dW,
// and the change of clock to effective time t(s) = gamma int Q^2 (1-Q)^2 ds.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "trajzoom/kernels.hpp"
#include "trajzoom/model.hpp"
#include "trajzoom/random.hpp"

namespace trajzoom {

/// One clamped Euler-Maruyama step with standard normal xi.
double em_step(double q, const ModelParams& params, double xi);

/// Throws kInconsistent for an infinite gamma and kOutOfRange(ds) unless
/// ds <= 0.1 / gamma.
void check_step_guard(const ModelParams& params);

struct SdeOptions {
  std::optional<double> q0;  // defaults to p
  bool keep_increments = true;
};

struct SdePath {
  Trajectory trajectory;
  double gamma = 0.0;
  std::vector<double> increments_w;  // the xi of each step (dW = sqrt(ds) xi)
  std::uint64_t clamped_steps = 0;
};

/// ceil(horizon_s / ds) steps; t accumulates gamma q^2 (1-q)^2 ds from the
/// pre-step value.
SdePath run_sde(const ModelParams& params, SeedSpec seed, double horizon_s, const SdeOptions& options = {});

/// Cross-check estimator sum (q_{k+1} - q_k)^2 of the final effective time.
double quadratic_variation_time(const Trajectory& traj);

/// Several trajectories advanced in lock step through the active kernel
/// table. Lane i draws from its own stream (master_seed, indices[i]), so each
/// lane is bit-identical to run_sde with that seed.
class SdeLanes {
 public:
  SdeLanes(const ModelParams& params, std::uint64_t master_seed, std::span<const std::uint64_t> indices,
           std::span<const double> q0, const kernels::KernelTable& table = kernels::active_kernels());

  std::size_t lanes() const noexcept { return q_.size(); }
  std::span<const double> q() const noexcept { return q_; }
  std::span<const double> t() const noexcept { return t_; }
  std::span<const std::uint64_t> clamped() const noexcept { return clamped_; }

  /// Advances every lane `steps` times. Optional outputs are [step*lanes+lane];
  /// `xi_out` receives the normals used.
  void advance(std::size_t steps, kernels::EmRecord record = {}, double* xi_out = nullptr);

  /// Restarts lane i as trajectory `index` from q0 at t = 0.
  void reset_lane(std::size_t lane, std::uint64_t index, double q0);

 private:
  const kernels::KernelTable* table_;
  kernels::EmCoefficients coeff_;
  std::uint64_t master_seed_;
  std::vector<RandomStream> streams_;
  std::vector<double> q_, t_, xi_;
  std::vector<std::uint64_t> clamped_;
};

/// Q on a uniform effective-time grid by last-observation interpolation.
struct EffectivePath {
  std::vector<double> t;
  std::vector<double> q;
  std::vector<double> s;  // real time of the observation carried forward
  bool degenerate_time = false;
};

/// Grid point j is j * dt_grid for j up to floor(t_final / dt_grid) and takes
/// the last sample with t_cum <= j * dt_grid. A path whose t_cum never grows
/// yields a single point and sets degenerate_time.
EffectivePath reparametrize(const Trajectory& traj, double dt_grid);

}  // namespace trajzoom
