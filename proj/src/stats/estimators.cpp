#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajzoom/stats.hpp"

namespace trajzoom {
namespace {

void require_samples(std::size_t n, const char* field) {
  if (n == 0) throw Error(ErrorCode::kEmptySamples, field, "no samples");
}

}  // namespace

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // The alternating series converges slowly here; use the theta-function
    // form of the CDF instead.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      cdf += std::exp(-j * j * pi2 / (8.0 * x * x));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require_samples(samples.size(), "samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, kolmogorov_survival(std::sqrt(n) * d), samples.size()};
}

Estimate mean_estimate(std::span<const double> samples) {
  require_samples(samples.size(), "samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double var = samples.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), samples.size()};
}

Estimate empirical_laplace(std::span<const double> samples, double sigma) {
  require_samples(samples.size(), "samples");
  std::vector<double> e(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) e[i] = std::exp(-sigma * samples[i]);
  Estimate out = mean_estimate(e);
  // exp(-sigma c) for identical samples is reproduced exactly; clear roundoff.
  if (std::all_of(e.begin(), e.end(), [&](double v) { return v == e.front(); })) out.std_error = 0.0;
  return out;
}

Estimate correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "y", "sample sizes differ");
  require_samples(x.size(), "samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r = (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  return {r, 1.0 / std::sqrt(n), x.size()};
}

FactorizationCheck laplace_factorization_check(std::span<const double> t1, std::span<const double> increments,
                                               double s1, double s2, double sigma1, double sigma2, double lambda,
                                               double p) {
  if (t1.size() != increments.size()) {
    throw Error(ErrorCode::kInvalidArgument, "increments", "sample sizes differ");
  }
  if (t1.size() < 10000) throw Error(ErrorCode::kInsufficientSamples, "samples", "at least 10^4 pairs required");
  if (!(s1 > 0.0 && s2 > s1)) throw Error(ErrorCode::kOutOfRange, "s", "need 0 < s1 < s2");
  const std::size_t n = t1.size();
  std::vector<double> joint(n), a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = std::exp(-sigma1 * t1[i]);
    b[i] = std::exp(-sigma2 * increments[i]);
    joint[i] = a[i] * b[i];
  }
  FactorizationCheck out;
  const Estimate j = mean_estimate(joint);
  out.joint = j.value;
  out.joint_stderr = j.std_error;
  out.product = levy_laplace(s1, sigma1, lambda, p) * levy_laplace(s2 - s1, sigma2, lambda, p);
  out.z_joint = j.std_error > 0.0 ? (j.value - out.product) / j.std_error : (j.value == out.product ? 0.0 : INFINITY);

  // Covariance through its influence function: c_i = (a_i - ma)(b_i - mb).
  const Estimate ma = mean_estimate(a);
  const Estimate mb = mean_estimate(b);
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = (a[i] - ma.value) * (b[i] - mb.value);
  const Estimate cov = mean_estimate(c);
  out.covariance = cov.value;
  out.covariance_stderr = cov.std_error;
  out.z_covariance = cov.std_error > 0.0 ? cov.value / cov.std_error : 0.0;
  out.passed = std::abs(out.z_joint) <= 3.0 && std::abs(out.z_covariance) <= 3.0;
  return out;
}

EntropySeries linear_entropy_series(std::span<const double> q, TimeMode mode, std::span<const double> b,
                                    std::span<const double> l, std::span<const double> u, double dt) {
  EntropySeries out;
  out.s_l.resize(q.size());
  kernels::active_kernels().linear_entropy(q.data(), out.s_l.data(), q.size());
  if (mode == TimeMode::kRealTime) return out;
  const std::size_t n = q.size();
  if (b.size() != n || l.size() != n || u.size() != n) {
    throw Error(ErrorCode::kMissingLocalTimes, "local_times", "effective-time mode needs B, L and U per grid point");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::kOutOfRange, "dt", "must be > 0");
  const std::size_t steps = n > 0 ? n - 1 : 0;
  out.martingale.resize(steps);
  out.drift.assign(steps, -2.0 * dt);
  out.boundary.resize(steps);
  out.residual.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const double ds = out.s_l[k + 1] - out.s_l[k];
    out.martingale[k] = 2.0 * (1.0 - 2.0 * q[k]) * (b[k + 1] - b[k]);
    out.boundary[k] = 2.0 * ((l[k + 1] - l[k]) + (u[k + 1] - u[k]));
    out.residual[k] = ds - out.martingale[k] - out.drift[k] - out.boundary[k];
  }
  return out;
}

}  // namespace trajzoom
