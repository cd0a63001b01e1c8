#pragma once

// Ensemble drivers that produce the samples tested against the reference
// laws. Every driver is deterministic in (config, master_seed) and
// independent of the thread count: trajectory i always uses the streams of
// index i and partial results are reduced in index order.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trajzoom/kernels.hpp"
#include "trajzoom/model.hpp"
#include "trajzoom/stats.hpp"

namespace trajzoom {

// ---- Excursions of reflected Brownian motion --------------------------------

struct ExcursionStudyConfig {
  double dt = 1e-4;
  double window = 20.0;  // excursions must start before this effective time
  double margin = 3.0;   // extra time simulated so late excursions can close
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  double floor = 0.02;
  double apex_min = 0.45;
  double apex_max = 0.55;
  double m_ref = 0.5;  // binned times are rescaled by (m_ref / m)^2
  bool refine_apex = true;
  kernels::ReflectionScheme scheme = kernels::ReflectionScheme::kBridge;
  unsigned threads = 1;
};

struct ExcursionStudyResult {
  std::vector<Excursion> binned;  // apex in [apex_min, apex_max], trajectory order
  std::vector<double> ascent;     // rescaled to m_ref
  std::vector<double> descent;
  std::vector<double> ascent_raw;
  std::vector<double> descent_raw;
  std::size_t excursions = 0;
  std::size_t spikes = 0;
  std::size_t jumps = 0;
  double effective_time = 0.0;
  double max_identity_residual = 0.0;  // max |Q - (Q0 + B + L - U)|
};

/// Two-sided reflected paths started at 0.
ExcursionStudyResult run_excursion_study(const ExcursionStudyConfig& config);

// ---- Inverse time change near one boundary ----------------------------------

struct LevyStudyConfig {
  double lambda = 1.0;
  double p = 0.5;
  double dt = 1e-3;
  double s1 = 0.5;
  double s2 = 1.0;
  /// Paths still short of s2 at this effective time are completed exactly
  /// from their current state by the strong Markov property.
  double cap = 20.0;
  std::size_t n_samples = 1;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
};

struct LevyStudyResult {
  std::vector<double> t1;  // t(s1)
  std::vector<double> t2;  // t(s2)
  std::size_t tail_completed = 0;
  double max_identity_residual = 0.0;
};

/// Reflection at 0 only, bridge scheme, started at 0.
LevyStudyResult run_levy_study(const LevyStudyConfig& config);

// ---- Linear entropy ---------------------------------------------------------

struct EntropyStudyConfig {
  double dt = 1e-4;
  double horizon = 10.0;
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  double bulk_lo = 0.2;
  double bulk_hi = 0.8;
  kernels::ReflectionScheme scheme = kernels::ReflectionScheme::kBridge;
  unsigned threads = 1;
};

struct EntropyStudyResult {
  Estimate bulk_ds;        // E[dS | q_k in bulk]
  Estimate bulk_residual;  // E[dS + 2 dt - 2 (1 - 2q) dB | q_k in bulk]
  Estimate residual;       // E[dS - 2 (1 - 2q) dB + 2 dt - 2 (dL + dU)], all steps
  double dt = 0.0;
  double max_identity_residual = 0.0;
};

/// Two-sided reflected paths with uniform starting points.
EntropyStudyResult run_entropy_study(const EntropyStudyConfig& config);

// ---- Spikes and boundary law at finite gamma --------------------------------

struct SpikeStudyConfig {
  ModelParams params;    // gamma, lambda, p, ds
  double window = 10.0;  // real time on the bottom plateau for the spike count
  double rate_window = 200.0;  // longer stretch used only to estimate the rate
  double law_window = 30.0;    // bottom-plateau time sampled for the boundary law
  double level = 0.5;          // spike height threshold m
  double plateau_band = 0.05;  // hysteresis: plateau changes at 1 - band / band
  double sample_spacing = 2.5e-3;
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory_index = 0;
};

struct SpikeStudyResult {
  std::size_t spikes_in_window = 0;
  std::size_t spikes_total = 0;
  std::size_t jumps_total = 0;
  double plateau_time_total = 0.0;
  double real_time = 0.0;
  std::vector<double> law_samples;
  std::uint64_t clamped_steps = 0;
};

/// One long trajectory started on the bottom plateau at Q = 0.
SpikeStudyResult run_spike_study(const SpikeStudyConfig& config);

// ---- Convergence of finite-gamma paths in effective time -----------------------

struct GammaStudyConfig {
  double lambda = 1.0;
  double p = 0.5;
  std::vector<double> gammas{50.0, 200.0, 800.0};
  double kappa = 0.002;  // ds = kappa / gamma, a fixed resolution in effective time
  double lag = 0.01;     // effective-time lag
  double bulk_lo = 0.2;
  double bulk_hi = 0.8;
  std::size_t n_samples = 1;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
};

struct GammaStudyPoint {
  double gamma = 0.0;
  KsResult oriented;    // increments signed towards p
  KsResult unoriented;
  Estimate oriented_mean;  // in units of sqrt(lag)
};

/// Each sample starts a fresh path at Q0 uniform on the bulk, reparametrizes
/// it by effective time and records (Q(lag) - Q0) / sqrt(lag).
std::vector<GammaStudyPoint> run_gamma_study(const GammaStudyConfig& config);

}  // namespace trajzoom
