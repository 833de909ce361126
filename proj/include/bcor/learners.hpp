#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bcor/model.hpp"
#include "bcor/rmab.hpp"
#include "bcor/rng.hpp"
#include "bcor/whittle.hpp"

namespace bcor {

// Sequential decision policy. Non-oracle learners see only their own
// observation history plus the public covariates X and spline basis M;
// oracle learners are constructed with the true instance.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual ActionVector act(int t, const SystemState& state) = 0;
  virtual void observe(int t, const SystemState& state, const ActionVector& a,
                       const SystemState& next) = 0;
  const WhittleDiagnostics& diagnostics() const { return diag_; }

 protected:
  WhittleDiagnostics diag_;
};

enum class PolicyKind { whittle, greedy };

enum class OracleKind { current_time, time_average, cumulative_average, greedy };

// Uniform random size-B subset.
ActionVector random_act(int B, int n, Rng& rng);

// Top-B arms by estimated treatment effect at the current state:
// TE_i = P(1|s_i,1) - P(1|s_i,0).
ActionVector greedy_act(const SystemState& state,
                        const std::vector<ArmSnapshot>& estimates, int B);

// True-dynamics summaries handed to the oracle policies: the instantaneous
// law, its average over the whole horizon, or its average up to t.
std::vector<ArmSnapshot> oracle_summarize(const RmabInstance& inst, int t,
                                          OracleKind kind);

class RandomLearner : public Learner {
 public:
  RandomLearner(int n, int B, Rng rng) : n_(n), b_(B), rng_(rng) {}
  ActionVector act(int, const SystemState&) override {
    return random_act(b_, n_, rng_);
  }
  void observe(int, const SystemState&, const ActionVector&,
               const SystemState&) override {}

 private:
  int n_, b_;
  Rng rng_;
};

// Per-(arm, state, action) Beta-Bernoulli Thompson sampling: flat Beta(1,1)
// prior, one posterior draw per decision, then the Whittle or greedy policy.
class TsLearner : public Learner {
 public:
  TsLearner(int n, int B, PolicyKind policy, const WhittleConfig& cfg,
            Rng rng);
  ActionVector act(int t, const SystemState& state) override;
  void observe(int t, const SystemState& state, const ActionVector& a,
               const SystemState& next) override;

 private:
  int n_, b_;
  PolicyKind policy_;
  WhittleConfig cfg_;
  Rng rng_;
  WhittleMemo memo_;
  std::vector<std::array<std::array<long, 2>, 4>> counts_;  // [arm][sa][succ/fail]
};

// Optimistic Whittle baseline: empirical rates widened by a UCB radius in
// the index-raising direction (active up, passive down).
class UcwLearner : public Learner {
 public:
  UcwLearner(int n, int T, int B, double c, const WhittleConfig& cfg, Rng rng);
  ActionVector act(int t, const SystemState& state) override;
  void observe(int t, const SystemState& state, const ActionVector& a,
               const SystemState& next) override;

 private:
  int n_, horizon_, b_;
  double c_;
  WhittleConfig cfg_;
  Rng rng_;
  WhittleMemo memo_;
  std::vector<std::array<std::array<long, 2>, 4>> counts_;  // [arm][sa][n/succ]
};

// The Bayesian learner: keeps the full observation history, refreshes one
// posterior draw per timestep (warm-started chain), maps it to transition
// estimates at the current time, and applies the Whittle or greedy policy.
// The first action of an episode is a uniformly random subset.
class BcorLearner : public Learner {
 public:
  BcorLearner(int n, int B, Eigen::MatrixXd X, Eigen::MatrixXd M,
              const HyperParams& hyper, const McmcConfig& mcmc,
              PolicyKind policy, const WhittleConfig& cfg, Rng rng);
  ActionVector act(int t, const SystemState& state) override;
  void observe(int t, const SystemState& state, const ActionVector& a,
               const SystemState& next) override;
  const PosteriorDraw& last_draw() const { return chain_.draw; }

 private:
  int n_, b_;
  Eigen::MatrixXd x_, m_;
  HyperParams hyper_;
  McmcConfig mcmc_;
  PolicyKind policy_;
  WhittleConfig cfg_;
  Rng rng_;
  WhittleMemo memo_;
  History history_;
  ChainState chain_;
};

// Clairvoyant baselines; kind picks the dynamics summary and (for greedy)
// the policy.
class OracleLearner : public Learner {
 public:
  OracleLearner(const RmabInstance& inst, OracleKind kind,
                const WhittleConfig& cfg);
  ActionVector act(int t, const SystemState& state) override;
  void observe(int, const SystemState&, const ActionVector&,
               const SystemState&) override {}

 private:
  const RmabInstance* inst_;
  OracleKind kind_;
  WhittleConfig cfg_;
  WhittleMemo memo_;
};

// Everything make_learner may hand to a learner. The instance pointer is
// consumed only by oracle identifiers; every other learner receives just
// (N, T, B, X, M) and the algorithm knobs.
struct LearnerContext {
  int n_arms = 0;
  int horizon = 0;
  int budget = 0;
  const Eigen::MatrixXd* X = nullptr;
  const Eigen::MatrixXd* M = nullptr;
  const RmabInstance* instance = nullptr;
  HyperParams hyper;
  McmcConfig mcmc;
  WhittleConfig whittle;
  double ucw_scale = 1.0;
};

// Registered identifiers, in canonical order.
const std::vector<std::string>& learner_registry();

std::unique_ptr<Learner> make_learner(const std::string& id,
                                      const LearnerContext& ctx, Rng rng);

}  // namespace bcor
