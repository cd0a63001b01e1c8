#include "trajzoom/discrete.hpp"

#include <cmath>

#include "trajzoom/random.hpp"

namespace trajzoom {

double lindblad_relax(double q, double lambda, double p, double ds) {
  const double q_new = p + (q - p) * std::exp(-lambda * ds);
  return std::min(1.0, std::max(0.0, q_new));
}

OutcomeProbabilities outcome_probabilities(double q, double epsilon) {
  return {0.5 * ((1.0 + epsilon) * q + (1.0 - epsilon) * (1.0 - q)),
          0.5 * ((1.0 - epsilon) * q + (1.0 + epsilon) * (1.0 - q))};
}

double kraus_posterior(double q, double epsilon, Outcome outcome) {
  const double sign = outcome == Outcome::kPlus ? 1.0 : -1.0;
  const double num = (1.0 + sign * epsilon) * q;
  const double den = num + (1.0 - sign * epsilon) * (1.0 - q);
  // den >= 1 - epsilon > 0 for q in [0,1]
  return std::min(1.0, num / den);
}

Measurement weak_measure(double q, double epsilon, double u) {
  const double p_plus = outcome_probabilities(q, epsilon).plus;
  const Outcome outcome = u < p_plus ? Outcome::kPlus : Outcome::kMinus;
  return {outcome, kraus_posterior(q, epsilon, outcome), p_plus};
}

namespace {

void check_normalization(double c) {
  if (c != 1.0 && c != 2.0) {
    throw Error(ErrorCode::kOutOfRange, "effective_time_normalization", "must be 1 or 2");
  }
}

}  // namespace

DiscreteRun run_discrete(const ModelParams& params, SeedSpec seed, std::size_t n_steps,
                         const DiscreteOptions& options) {
  validate(params, Regime::kDiscrete);
  check_normalization(options.normalization);
  if (n_steps == 0) throw Error(ErrorCode::kOutOfRange, "n_steps", "must be >= 1");
  const double q0 = options.q0.value_or(params.p);
  if (!(q0 >= 0.0 && q0 <= 1.0)) throw Error(ErrorCode::kOutOfRange, "q0", "must lie in [0,1]");

  DiscreteRun run;
  Trajectory& tr = run.trajectory;
  tr.s.reserve(n_steps + 1);
  tr.q.reserve(n_steps + 1);
  tr.t.reserve(n_steps + 1);
  run.steps.reserve(n_steps);
  tr.s.push_back(0.0);
  tr.q.push_back(q0);
  tr.t.push_back(0.0);

  const double decay = std::exp(-params.lambda * params.ds);
  RandomStream rng(seed, Substream::kIncrements);
  double q = q0;
  double t = 0.0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double relaxed = std::min(1.0, std::max(0.0, params.p + (q - params.p) * decay));
    const Measurement m = weak_measure(relaxed, params.epsilon, rng.uniform());
    const double dq = m.q_post - q;
    const double dt = options.normalization * (dq * dq);
    t += dt;
    q = m.q_post;
    tr.s.push_back(static_cast<double>(k) * params.ds);
    tr.q.push_back(q);
    tr.t.push_back(t);
    run.steps.push_back({k, m.outcome, q, dt});
  }
  return run;
}

std::vector<double> discrete_effective_time(std::span<const double> q, double normalization) {
  check_normalization(normalization);
  std::vector<double> t(q.size(), 0.0);
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (!(q[k] >= 0.0 && q[k] <= 1.0)) {
      throw Error(ErrorCode::kOutOfRange, "q", "sample " + std::to_string(k) + " outside [0,1]");
    }
    if (k > 0) {
      const double dq = q[k] - q[k - 1];
      t[k] = t[k - 1] + normalization * (dq * dq);
    }
  }
  return t;
}

}  // namespace trajzoom
