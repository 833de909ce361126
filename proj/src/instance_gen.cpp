#include "bcor/instance_gen.hpp"

#include <cmath>
#include <stdexcept>

#include "bcor/spline.hpp"
#include "bcor/stats.hpp"

namespace bcor {

GenSetting parse_setting(const std::string& s) {
  if (s == "well_specified") return GenSetting::well_specified;
  if (s == "no_within_arm_sharing") return GenSetting::no_within_arm_sharing;
  if (s == "stationary") return GenSetting::stationary;
  if (s == "uninformative_covariates")
    return GenSetting::uninformative_covariates;
  if (s == "highly_misspecified") return GenSetting::highly_misspecified;
  throw std::invalid_argument("unknown setting: " + s);
}

std::string setting_name(GenSetting s) {
  switch (s) {
    case GenSetting::well_specified: return "well_specified";
    case GenSetting::no_within_arm_sharing: return "no_within_arm_sharing";
    case GenSetting::stationary: return "stationary";
    case GenSetting::uninformative_covariates:
      return "uninformative_covariates";
    case GenSetting::highly_misspecified: return "highly_misspecified";
  }
  throw std::logic_error("setting_name: bad enum");
}

CovariateSpec CovariateSpec::for_k(int k) {
  using K = CovariateKind;
  CovariateSpec spec;
  if (k == 4) {
    spec.recipe = {K::rounded_age, K::std_normal, K::std_normal, K::bernoulli};
  } else if (k == 8) {
    spec.recipe = {K::rounded_age, K::std_normal, K::std_normal, K::bernoulli,
                   K::bernoulli,   K::std_normal, K::std_normal, K::std_normal};
  } else {
    throw std::invalid_argument("CovariateSpec: only k=4 and k=8 recipes");
  }
  return spec;
}

Eigen::MatrixXd gen_covariates(int n, const CovariateSpec& spec, Rng& rng) {
  if (n < 2) throw std::invalid_argument("gen_covariates: need N >= 2");
  Eigen::MatrixXd x(n, spec.k());
  for (int c = 0; c < spec.k(); ++c) {
    switch (spec.recipe[c]) {
      case CovariateKind::rounded_age: {
        for (int i = 0; i < n; ++i)
          x(i, c) = std::round(22.0 + 2.0 * rng.normal());
        double mean = x.col(c).mean();
        x.col(c).array() -= mean;
        double sd = std::sqrt(x.col(c).squaredNorm() / (n - 1));
        if (sd > 0.0) x.col(c) /= sd;
        break;
      }
      case CovariateKind::std_normal:
        for (int i = 0; i < n; ++i) x(i, c) = rng.normal();
        break;
      case CovariateKind::bernoulli:
        for (int i = 0; i < n; ++i) x(i, c) = rng.bernoulli(0.5);
        break;
    }
  }
  return x;
}

Eigen::MatrixXd gen_spline_basis(int T, const SplineSpec& spec) {
  return bspline_basis(T, spec.d, spec.degree);
}

GenResult gen_instance_full(GenSetting setting, int n, int T, int B,
                            const CovariateSpec& cov, const SplineSpec& spl,
                            const HyperParams& hyper, std::uint64_t meta_seed,
                            Rng& rng) {
  GenResult out;
  RmabInstance& inst = out.instance;
  inst.n_arms = n;
  inst.horizon = T;
  inst.budget = B;
  inst.meta.setting = setting_name(setting);
  inst.meta.seed = meta_seed;
  inst.covariates = gen_covariates(n, cov, rng);
  inst.spline_basis = gen_spline_basis(T, spl);

  PosteriorDraw& dr = out.draw;
  if (setting == GenSetting::highly_misspecified) {
    // Plain per-arm probit random effects at scale 0.1; no covariate, time,
    // or within-arm structure.
    const double sigma = 0.1;
    dr = PosteriorDraw{};
    dr.mu_beta = Eigen::VectorXd::Zero(cov.k());
    dr.alpha.resize(n, 4);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        dr.var_alpha[s][a] = sigma * sigma;
        for (int i = 0; i < n; ++i)
          dr.alpha(i, s * 2 + a) = sigma * rng.normal();
      }
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        dr.beta[s][a] = Eigen::VectorXd::Zero(cov.k());
        dr.eta[s][a] = Eigen::VectorXd::Zero(spl.d);
      }
  } else {
    dr = prior_draw(hyper, n, cov.k(), spl.d, rng);
    // Zero after the full draw so every setting consumes the stream the same
    // way for a given seed.
    switch (setting) {
      case GenSetting::well_specified:
        break;
      case GenSetting::no_within_arm_sharing:
        dr.b0 = 0.0;
        dr.b1 = 0.0;
        break;
      case GenSetting::stationary:
        for (int s = 0; s < 2; ++s)
          for (int a = 0; a < 2; ++a) dr.eta[s][a].setZero();
        break;
      case GenSetting::uninformative_covariates:
        dr.mu_beta.setZero();
        for (int s = 0; s < 2; ++s)
          for (int a = 0; a < 2; ++a) dr.beta[s][a].setZero();
        break;
      case GenSetting::highly_misspecified:
        break;  // handled above
    }
  }

  inst.transitions.resize(static_cast<std::size_t>(n) * T * 4);
  for (int t = 1; t <= T; ++t) {
    auto snaps = transitions_from_draw(dr, inst.covariates, inst.spline_basis, t);
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) inst.p(i, t, s, a) = snaps[i].p[s][a];
  }
  auto bad = validate_instance(inst);
  if (!bad.empty())
    throw std::logic_error("gen_instance produced invalid instance: " +
                           bad.front());
  return out;
}

RmabInstance gen_instance(GenSetting setting, int n, int T, int B,
                          const CovariateSpec& cov, const SplineSpec& spl,
                          const HyperParams& hyper, std::uint64_t meta_seed,
                          Rng& rng) {
  return gen_instance_full(setting, n, T, B, cov, spl, hyper, meta_seed, rng)
      .instance;
}

}  // namespace bcor
