#include "bcor/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bcor {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kSqrt1_2 = 0.70710678118654752440084436210485;

// Rational approximation for the normal quantile (Acklam). Absolute error
// ~1e-9, used only as the starting point for Newton refinement.
double quantile_seed(double p) {
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kSqrt1_2); }

double log_norm_cdf(double x) {
  if (x > -36.0) return std::log(norm_cdf(x));
  // Lower tail: log Phi(x) = -x^2/2 - log(-x) - log sqrt(2*pi)
  //                          + log(1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
  double z = -x;
  double w = 1.0 / (z * z);
  double series = 1.0 + w * (-1.0 + w * (3.0 + w * (-15.0 + w * 105.0)));
  return -0.5 * z * z - std::log(z) - kLogSqrt2Pi + std::log(series);
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("norm_quantile: p outside [0, 1]");
  }
  // Work in the lower half for symmetric accuracy.
  bool flip = p > 0.5;
  double q = flip ? 1.0 - p : p;
  double x = quantile_seed(q);
  double logq = std::log(q);
  // Newton on f(x) = log Phi(x) - log q; f' = phi/Phi.
  for (int it = 0; it < 3; ++it) {
    double lcdf = log_norm_cdf(x);
    double lpdf = -kLogSqrt2Pi - 0.5 * x * x;
    double step = (lcdf - logq) * std::exp(lcdf - lpdf);
    x -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  return flip ? -x : x;
}

double norm_logpdf(double x, double mean, double var) {
  double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

double inv_gamma_logpdf(double x, double shape, double scale) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) -
         (shape + 1.0) * std::log(x) - scale / x;
}

double trunc_std_normal_lower(double lo, Rng& rng) {
  if (lo < 0.4) {
    // Acceptance probability 1 - Phi(0.4) > 0.34; cheap enough.
    for (;;) {
      double x = rng.normal();
      if (x > lo) return x;
    }
  }
  // Robert (1995): exponential proposal with the optimal rate.
  double lambda = 0.5 * (lo + std::sqrt(lo * lo + 4.0));
  for (;;) {
    double x = lo + rng.exponential() / lambda;
    double d = x - lambda;
    if (std::log(rng.uniform_pos()) <= -0.5 * d * d) return x;
  }
}

double probit_latent(double mean, int y, Rng& rng) {
  if (y == 1) return mean + trunc_std_normal_lower(-mean, rng);
  return mean - trunc_std_normal_lower(mean, rng);
}

}  // namespace bcor
