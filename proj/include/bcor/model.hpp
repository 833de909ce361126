#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bcor/rmab.hpp"
#include "bcor/rng.hpp"
#include "bcor/whittle.hpp"
#include "json.hpp"

namespace bcor {

// Prior scales of the hierarchical probit model. Defaults are the reference
// specification: N(0, 0.1^2) for b0, b1 and the beta coefficient blocks,
// N(0, 0.3^2) for mu_beta and the eta blocks, Inverse-Gamma(100, 1) for the
// random-effect variances.
struct HyperParams {
  double tau0 = 100.0;   // Inverse-Gamma shape
  double sigma0 = 1.0;   // Inverse-Gamma scale
  double var_mu = 0.09;  // prior variance of mu_beta components
  double var_b0 = 0.01;
  double var_b1 = 0.01;
  double var_beta[2][2] = {{0.01, 0.01}, {0.01, 0.01}};
  double var_eta[2][2] = {{0.09, 0.09}, {0.09, 0.09}};

  void validate() const;
};

// One joint draw of every model parameter.
//
// Transition model, with x the arm covariates and m the time spline row:
//   P(1 | s, 0) = Phi(x.beta[s][0] + m.eta[s][0] + alpha[i][s][0])
//   P(1 | s, 1) = Phi(x.beta[s][1] + m.eta[s][1] + alpha[i][s][1]
//                     + b0*alpha[i][0][0] + b1*alpha[i][1][0])
// so an arm's passive-action random effects inform its active dynamics.
struct PosteriorDraw {
  double b0 = 0.0, b1 = 0.0;
  Eigen::VectorXd mu_beta;                   // k
  double var_alpha[2][2] = {{1, 1}, {1, 1}};
  Eigen::MatrixXd alpha;                     // N x 4, column (s,a) -> 2s+a
  Eigen::VectorXd beta[2][2];                // k each
  Eigen::VectorXd eta[2][2];                 // d each

  int n_arms() const { return static_cast<int>(alpha.rows()); }
  int k() const { return static_cast<int>(mu_beta.size()); }
  int d() const { return static_cast<int>(eta[0][0].size()); }
};

struct McmcConfig {
  int n_warmup = 500;
  int n_rewarmup = 100;  // warmup when resuming a kept chain
  int n_keep = 1;
  int thin = 1;
  bool warm_start = true;

  void validate() const;
};

// Observations bucketed by (state, action), with per-bucket design rows
// gathered from X and M and Gram matrices precomputed for the conjugate
// updates.
struct DesignData {
  struct Bucket {
    std::vector<int> arm;   // arm index per observation
    std::vector<int> y;     // next_state per observation
    Eigen::MatrixXd x_rows;  // n_obs x k
    Eigen::MatrixXd m_rows;  // n_obs x d
    Eigen::MatrixXd xtx;     // k x k
    Eigen::MatrixXd mtm;     // d x d
    std::vector<std::vector<int>> obs_of_arm;  // arm -> observation indices
    int size() const { return static_cast<int>(y.size()); }
  };
  Bucket bucket[2][2];
  int n_arms = 0, k = 0, d = 0;
  int total() const {
    return bucket[0][0].size() + bucket[0][1].size() + bucket[1][0].size() +
           bucket[1][1].size();
  }
};

// Gibbs chain: parameters plus the latent probit variable per observation.
struct ChainState {
  PosteriorDraw draw;
  std::vector<double> z[2][2];
  bool initialized = false;
};

PosteriorDraw prior_draw(const HyperParams& hyper, int n_arms, int k, int d,
                         Rng& rng);

// Linear predictor for arm `i` at covariate row x and spline row m.
double linear_predictor(const PosteriorDraw& draw, int i,
                        const Eigen::RowVectorXd& x,
                        const Eigen::RowVectorXd& m, int s, int a);

// Transition estimates Phi(linear predictor) for every arm at timestep t.
std::vector<ArmSnapshot> transitions_from_draw(const PosteriorDraw& draw,
                                               const Eigen::MatrixXd& X,
                                               const Eigen::MatrixXd& M,
                                               int t);

DesignData build_design(const History& history, const Eigen::MatrixXd& X,
                        const Eigen::MatrixXd& M);

// One full sweep of the blocked conditional updates (latent z, beta blocks,
// mu_beta, eta blocks, alpha blocks, (b0, b1), variance components).
void gibbs_sweep(ChainState& chain, const DesignData& data,
                 const HyperParams& hyper, Rng& rng);

// Runs the chain and returns the final retained draw. When `chain` is given
// and already initialized (and cfg.warm_start is set), resumes from it with
// the shorter re-warmup; otherwise starts fresh from a prior draw.
PosteriorDraw posterior_sample(const DesignData& data,
                               const HyperParams& hyper,
                               const McmcConfig& cfg, Rng& rng,
                               ChainState* chain = nullptr);
PosteriorDraw posterior_sample(const History& history,
                               const Eigen::MatrixXd& X,
                               const Eigen::MatrixXd& M,
                               const HyperParams& hyper,
                               const McmcConfig& cfg, Rng& rng,
                               ChainState* chain = nullptr);

// Joint log density (priors + probit likelihood), up to a constant.
double log_unnormalized_posterior(const PosteriorDraw& draw,
                                  const DesignData& data,
                                  const HyperParams& hyper);

// Transition prediction for an arm never seen in training: fresh random
// effects are drawn from N(0, var_alpha) and combined with the draw's
// shared structure.
ArmSnapshot predict_new_arm(const PosteriorDraw& draw,
                            const Eigen::RowVectorXd& x_new,
                            const Eigen::RowVectorXd& m_t, Rng& rng);

// Chain persistence for warm starts across harness invocations.
nlohmann::json chain_to_json(const ChainState& chain);
ChainState chain_from_json(const nlohmann::json& j);

}  // namespace bcor
