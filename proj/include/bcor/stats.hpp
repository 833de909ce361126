#pragma once

#include "bcor/rng.hpp"

namespace bcor {

// Standard normal CDF, accurate in both tails.
double norm_cdf(double x);

// log(norm_cdf(x)); switches to an asymptotic expansion deep in the lower
// tail where the CDF underflows.
double log_norm_cdf(double x);

// Standard normal quantile. Rational initial guess polished with Newton
// steps on the log-CDF, giving near machine precision over (0, 1).
double norm_quantile(double p);

// log N(x | mean, var) density.
double norm_logpdf(double x, double mean, double var);

// log InvGamma(x | shape, scale) density.
double inv_gamma_logpdf(double x, double shape, double scale);

// Draw from a standard normal truncated to (lo, +inf). Uses plain rejection
// when the region keeps reasonable mass and Robert's exponential-envelope
// rejection sampler for far-tail truncation points.
double trunc_std_normal_lower(double lo, Rng& rng);

// Latent probit utility z ~ N(mean, 1) conditioned on the sign that is
// consistent with the binary outcome y (z > 0 iff y == 1).
double probit_latent(double mean, int y, Rng& rng);

}  // namespace bcor
