#include <cmath>
#include <numbers>

#include "trajzoom/stats.hpp"

namespace trajzoom {

double excursion_laplace_exact(double m, double sigma) {
  const double x = m * std::sqrt(2.0 * sigma);
  // x / sinh x = 1 - x^2/6 + 7 x^4/360 near 0, where the quotient loses digits
  if (x < 1e-4) return 1.0 - x * x / 6.0;
  if (x > 700.0) return 0.0;
  return x / std::sinh(x);
}

double excursion_mean_ascent(double m) { return m * m / 3.0; }

double boundary_law_cdf(double q, double gamma, double lambda, double p) {
  if (!(q > 0.0)) return 0.0;
  return std::exp(-2.0 / (gamma * lambda * p * q));
}

double boundary_layer_cdf(double q, double gamma, double lambda, double p) {
  if (!(q > 0.0)) return 0.0;
  return std::exp(-2.0 * lambda * p / (gamma * q));
}

double spike_count_mean(double m, double lambda, double p, double window_s, Boundary side) {
  if (side == Boundary::kTop) return 2.0 * window_s / (lambda * (1.0 - p) * (1.0 - m));
  return 2.0 * window_s / (lambda * p * m);
}

double spike_count_excursion_theory(double m, double lambda, double p, double window_s) {
  return lambda * p * window_s * (1.0 / m - 1.0);
}

double levy_density(double s, double t, double lambda, double p) {
  if (!(t > 0.0)) return 0.0;
  const double a = lambda * p * s;
  const double x = (a * a) / (2.0 * t);
  if (x > 700.0) return 0.0;  // t^{-3/2} overflows before the exponential underflows
  return a / std::sqrt(2.0 * std::numbers::pi) * std::pow(t, -1.5) * std::exp(-x);
}

double levy_cdf(double s, double t, double lambda, double p) {
  if (!(t > 0.0)) return 0.0;
  return std::erfc(lambda * p * s / std::sqrt(2.0 * t));
}

double levy_laplace(double s, double sigma, double lambda, double p) {
  return std::exp(-s * lambda * p * std::sqrt(2.0 * sigma));
}

LawSpec excursion_ascent_law(double m) {
  LawSpec law;
  law.name = "excursion_ascent";
  law.parameters = {{"m", m}};
  law.laplace = [m](double sigma) { return excursion_laplace_exact(m, sigma); };
  return law;
}

LawSpec levy_law(double s, double lambda, double p) {
  LawSpec law;
  law.name = "levy_time_change";
  law.parameters = {{"s", s}, {"lambda", lambda}, {"p", p}};
  law.density = [=](double t) { return levy_density(s, t, lambda, p); };
  law.cdf = [=](double t) { return levy_cdf(s, t, lambda, p); };
  law.laplace = [=](double sigma) { return levy_laplace(s, sigma, lambda, p); };
  return law;
}

LawSpec boundary_law(double gamma, double lambda, double p) {
  LawSpec law;
  law.name = "boundary_law";
  law.parameters = {{"gamma", gamma}, {"lambda", lambda}, {"p", p}};
  const double c = 2.0 / (gamma * lambda * p);
  law.density = [c](double q) {
    const double x = c / q;
    return q > 0.0 && x < 700.0 ? x * x / c * std::exp(-x) : 0.0;
  };
  law.cdf = [=](double q) { return boundary_law_cdf(q, gamma, lambda, p); };
  return law;
}

LawSpec standard_normal_law(double scale) {
  LawSpec law;
  law.name = "normal";
  law.parameters = {{"scale", scale}};
  law.density = [scale](double x) {
    const double z = x / scale;
    return std::exp(-0.5 * z * z) / (scale * std::sqrt(2.0 * std::numbers::pi));
  };
  law.cdf = [scale](double x) { return 0.5 * std::erfc(-x / (scale * std::numbers::sqrt2)); };
  law.laplace = nullptr;
  return law;
}

}  // namespace trajzoom
