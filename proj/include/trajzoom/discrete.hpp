#pragma once

// Discrete weak-measurement chain: exact thermal relaxation over ds, then a
// two-outcome energy measurement of strength epsilon.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trajzoom/model.hpp"

namespace trajzoom {

enum class Outcome : int { kPlus = 1, kMinus = -1 };

/// Exact solution of dQ/ds = lambda (p - Q) after time ds.
double lindblad_relax(double q, double lambda, double p, double ds);

/// Outcome probabilities Tr[B± rho B±^dagger] with the normalised operators
/// B± = diag(sqrt(1±eps), sqrt(1∓eps)) / sqrt(2). Each is evaluated from its
/// own formula, so their sum being 1 is a genuine check.
struct OutcomeProbabilities {
  double plus;
  double minus;
};
OutcomeProbabilities outcome_probabilities(double q, double epsilon);

/// Ground-state population after observing `outcome`.
double kraus_posterior(double q, double epsilon, Outcome outcome);

struct Measurement {
  Outcome outcome;
  double q_post;
  double p_plus;
};

/// Outcome + when u < p_plus.
Measurement weak_measure(double q, double epsilon, double u);

struct DiscreteStepRecord {
  std::size_t step_index;
  Outcome outcome;
  double q_post;
  double dt_increment;
};

struct DiscreteOptions {
  /// c in t_n = sum c (q_m - q_{m-1})^2. 2 is Tr[(d rho)^2]; 1 matches the
  /// continuous (dQ)^2 convention.
  double normalization = 2.0;
  std::optional<double> q0;  // defaults to p
};

struct DiscreteRun {
  Trajectory trajectory;  // n_steps + 1 points, s = 0, ds, ..., n_steps ds
  std::vector<DiscreteStepRecord> steps;
};

DiscreteRun run_discrete(const ModelParams& params, SeedSpec seed, std::size_t n_steps,
                         const DiscreteOptions& options = {});

/// t_0 = 0, t_n = t_{n-1} + c (q_n - q_{n-1})^2. Throws kOutOfRange for q
/// outside [0,1] or c not in {1, 2}.
std::vector<double> discrete_effective_time(std::span<const double> q, double normalization = 2.0);

}  // namespace trajzoom
