#pragma once

#include <string>

#include "bcor/model.hpp"
#include "bcor/rmab.hpp"
#include "bcor/rng.hpp"

namespace bcor {

// The five simulation regimes.
enum class GenSetting {
  well_specified,           // (a) full model
  no_within_arm_sharing,    // (b) b0 = b1 = 0
  stationary,               // (c) eta = 0
  uninformative_covariates, // (d) mu_beta = 0, beta = 0
  highly_misspecified,      // (e) stationary, P = Phi(alpha), alpha ~ N(0, 0.1^2)
};

GenSetting parse_setting(const std::string& s);
std::string setting_name(GenSetting s);

enum class CovariateKind { rounded_age, std_normal, bernoulli };

struct CovariateSpec {
  std::vector<CovariateKind> recipe;
  int k() const { return static_cast<int>(recipe.size()); }
  // k=4: simulated age round(N(22, 2^2)) standardized, two N(0,1), one
  // Bern(0.5). k=8 appends one Bern(0.5) and three N(0,1).
  static CovariateSpec for_k(int k);
};

struct SplineSpec {
  int degree = 3;
  int d = 4;
};

// Covariate matrix, drawn column by column per the recipe. The age column is
// mean-centered and scaled to unit sample standard deviation.
Eigen::MatrixXd gen_covariates(int n, const CovariateSpec& spec, Rng& rng);

Eigen::MatrixXd gen_spline_basis(int T, const SplineSpec& spec);

struct GenResult {
  RmabInstance instance;
  PosteriorDraw draw;  // generating parameters (post zeroing)
};

// Draws parameters from the full prior, zeroes the components the setting
// switches off (after the full draw, so all settings consume the stream
// identically for a given seed), and fills the transition tensor by the
// probit link. Setting (e) bypasses the hierarchy entirely.
GenResult gen_instance_full(GenSetting setting, int n, int T, int B,
                            const CovariateSpec& cov, const SplineSpec& spl,
                            const HyperParams& hyper, std::uint64_t meta_seed,
                            Rng& rng);

RmabInstance gen_instance(GenSetting setting, int n, int T, int B,
                          const CovariateSpec& cov, const SplineSpec& spl,
                          const HyperParams& hyper, std::uint64_t meta_seed,
                          Rng& rng);

}  // namespace bcor
