#pragma once

// Reference laws and the estimators used to test simulated ensembles
// against them.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajzoom/kernels.hpp"
#include "trajzoom/limit.hpp"
#include "trajzoom/random.hpp"

namespace trajzoom {

// ---- Laws -----------------------------------------------------------------

/// Laplace transform of the time to climb from a boundary to height m along
/// an excursion of maximum m: m sqrt(2 sigma) / sinh(m sqrt(2 sigma)).
double excursion_laplace_exact(double m, double sigma);

/// -d/dsigma of the transform at 0, i.e. m^2 / 3.
double excursion_mean_ascent(double m);

/// Boundary law as printed, P[Q < q] = exp(-2 / (gamma lambda p q)).
double boundary_law_cdf(double q, double gamma, double lambda, double p);

/// Stationary law of dQ = lambda p ds + sqrt(gamma) Q dW near Q = 0:
/// P[Q < q] = exp(-2 lambda p / (gamma q)).
double boundary_layer_cdf(double q, double gamma, double lambda, double p);

enum class Boundary { kBottom, kTop };

/// Poisson mean 2 window / (lambda p m) of bottom spikes above m. The top
/// version substitutes p -> 1-p and m -> 1-m (m is then the level the spike
/// dips below); it is obtained by symmetry only.
double spike_count_mean(double m, double lambda, double p, double window_s, Boundary side = Boundary::kBottom);

/// Expected number of spikes above m (excluding jumps) per window of time
/// spent on the bottom plateau, from the excursion measure of reflected
/// Brownian motion: lambda p window (1/m - 1).
double spike_count_excursion_theory(double m, double lambda, double p, double window_s);

/// Density of t(s), lambda p s / sqrt(2 pi) t^{-3/2} exp(-(lambda p s)^2 / 2t).
double levy_density(double s, double t, double lambda, double p);
/// erfc(lambda p s / sqrt(2 t)).
double levy_cdf(double s, double t, double lambda, double p);
/// exp(-s lambda p sqrt(2 sigma)).
double levy_laplace(double s, double sigma, double lambda, double p);

/// A reference law evaluated by name. Modes absent for a law are empty.
struct LawSpec {
  std::string name;
  std::map<std::string, double> parameters;
  std::function<double(double)> density;
  std::function<double(double)> cdf;
  std::function<double(double)> laplace;
};

LawSpec excursion_ascent_law(double m);
LawSpec levy_law(double s, double lambda, double p);
LawSpec boundary_law(double gamma, double lambda, double p);
LawSpec standard_normal_law(double scale = 1.0);

// ---- Estimators -----------------------------------------------------------

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// Takes samples by value because it sorts them. Throws kEmptySamples.
KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error of exp(-sigma x). Throws kEmptySamples.
Estimate empirical_laplace(std::span<const double> samples, double sigma);
Estimate mean_estimate(std::span<const double> samples);

/// Pearson correlation and its standard error under independence, 1/sqrt(n).
Estimate correlation(std::span<const double> x, std::span<const double> y);

struct FactorizationCheck {
  double joint = 0.0;        // E[exp(-s1 t1 - s2 dt)]
  double joint_stderr = 0.0;
  double product = 0.0;      // closed-form target
  double z_joint = 0.0;      // (joint - product) / joint_stderr
  double covariance = 0.0;   // Cov(exp(-s1 t1), exp(-s2 dt))
  double covariance_stderr = 0.0;
  double z_covariance = 0.0;
  bool passed = false;       // |z| <= 3 for both
};

/// Joint Laplace transform of (t(s1), t(s2) - t(s1)) against
/// exp(-s1 lambda p sqrt(2 sigma1)) exp(-(s2-s1) lambda p sqrt(2 sigma2)).
/// Throws kInsufficientSamples below 10^4 pairs.
FactorizationCheck laplace_factorization_check(std::span<const double> t1, std::span<const double> increments,
                                               double s1, double s2, double sigma1, double sigma2, double lambda,
                                               double p);

enum class TimeMode { kRealTime, kEffectiveTime };

struct EntropySeries {
  std::vector<double> s_l;  // 2 q (1 - q)
  // Effective-time mode only, one entry per step k -> k+1:
  std::vector<double> martingale;  // 2 (1 - 2 q_k) dB_k
  std::vector<double> drift;       // -2 dt
  std::vector<double> boundary;    // 2 (dL_k + dU_k)
  std::vector<double> residual;    // dS - martingale - drift - boundary
};

/// Linear entropy of a path. Effective-time mode needs b, l and u of the same
/// length as q (kMissingLocalTimes otherwise) and the step dt.
EntropySeries linear_entropy_series(std::span<const double> q, TimeMode mode, std::span<const double> b = {},
                                    std::span<const double> l = {}, std::span<const double> u = {},
                                    double dt = 0.0);

// ---- Excursions -------------------------------------------------------------

enum class ExcursionKind { kSpike, kJump };

struct Excursion {
  double t_start = 0.0;
  double t_apex = 0.0;
  double t_end = 0.0;
  double height = 0.0;  // measured from the origin boundary
  int origin = 0;       // 0 or 1
  ExcursionKind kind = ExcursionKind::kSpike;
  std::size_t first_index = 0;  // grid points first_index..last_index lie inside
  std::size_t last_index = 0;

  double ascent_time() const noexcept { return t_apex - t_start; }
  double descent_time() const noexcept { return t_end - t_apex; }
};

struct ExcursionOptions {
  double floor = 0.02;
  std::optional<double> jump_tolerance;  // default 2 sqrt(dt)
  /// When set, the maximum inside each step near the grid apex is drawn from
  /// the Brownian-bridge law, refining both the height and the apex time.
  RandomStream* refine_rng = nullptr;
  double refine_window = 6.0;  // in units of sqrt(dt) below the grid apex
  /// Excursions whose grid apex stays below this minus the window keep their
  /// grid height and draw nothing.
  double refine_above = 0.0;
};

/// Boundary contacts are grid points sitting on 0 or 1 and steps over which
/// L or U grows. Consecutive contacts delimit an excursion if the path
/// between them rises above `floor`. Step contacts are timed at the step
/// midpoint under the bridge scheme and at the step end under the clamp
/// scheme. Only excursions closed by a later contact are returned.
std::vector<Excursion> detect_excursions(std::span<const double> q, std::span<const double> big_l,
                                         std::span<const double> big_u, double dt,
                                         kernels::ReflectionScheme scheme, const ExcursionOptions& options = {});
std::vector<Excursion> detect_excursions(const LimitTrajectory& path, const ExcursionOptions& options = {});

/// detect_excursions one grid point at a time, for paths too long to keep.
/// Feeding a whole path yields exactly the list detect_excursions returns,
/// including the refinement draws.
class ExcursionTracker {
 public:
  ExcursionTracker(double dt, kernels::ReflectionScheme scheme, const ExcursionOptions& options = {});

  /// Appends the next grid point (q, L, U); t = index * dt.
  void push(double q, double big_l, double big_u);

  /// Excursions closed so far, in order. The caller may consume and clear.
  std::vector<Excursion>& closed() noexcept { return closed_; }

 private:
  struct Step {
    std::size_t k;  // step k -> k+1
    double h0, h1;
  };

  double height(double q) const noexcept { return side_ == 0 ? q : 1.0 - q; }
  void add_point(std::size_t k, double q);
  void close(double time, int closing_side);

  double dt_;
  kernels::ReflectionScheme scheme_;
  ExcursionOptions options_;
  double tolerance_;
  double window_;
  std::size_t next_ = 0;
  double prev_l_ = 0.0, prev_u_ = 0.0;
  bool open_ = false;  // a contact has been seen
  int side_ = 0;
  double t_open_ = 0.0;
  bool empty_ = true;  // no grid point since the last contact
  std::size_t first_ = 0, last_ = 0, apex_ = 0;
  double apex_height_ = 0.0, last_height_ = 0.0;
  std::vector<Step> near_apex_;
  std::size_t prune_at_ = 64;
  std::vector<Excursion> closed_;
};

}  // namespace trajzoom
