#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "bcor/rng.hpp"
#include "json.hpp"

namespace bcor {

// Binary per-arm states and actions. A SystemState holds one 0/1 entry per
// arm; an ActionVector holds one 0/1 entry per arm with exactly B ones.
using SystemState = std::vector<int>;
using ActionVector = std::vector<int>;

struct InstanceMeta {
  std::string setting;
  std::uint64_t seed = 0;
};

// A finite-horizon restless bandit instance: N arms, each a two-state MDP
// whose transition law may vary with the (1-based) timestep.
struct RmabInstance {
  int n_arms = 0;
  int horizon = 0;
  int budget = 0;
  Eigen::MatrixXd covariates;    // N x k, row per arm
  Eigen::MatrixXd spline_basis;  // T x d, row per timestep
  // P(next state = 1 | s, a) flattened as [arm][t][s][a].
  std::vector<double> transitions;
  InstanceMeta meta;

  int k() const { return static_cast<int>(covariates.cols()); }
  int d() const { return static_cast<int>(spline_basis.cols()); }

  double p(int arm, int t, int s, int a) const {
    return transitions[idx(arm, t, s, a)];
  }
  double& p(int arm, int t, int s, int a) {
    return transitions[idx(arm, t, s, a)];
  }

  std::size_t idx(int arm, int t, int s, int a) const {
    return ((static_cast<std::size_t>(arm) * horizon + (t - 1)) * 2 + s) * 2 +
           a;
  }
};

// One observed arm transition.
struct TransitionRecord {
  int arm;
  int time;  // 1-based timestep at which the action was taken
  int state;
  int action;
  int next_state;
};

// Chronological log of everything a learner has observed.
class History {
 public:
  void append_step(int t, const SystemState& s, const ActionVector& a,
                   const SystemState& next);
  const std::vector<TransitionRecord>& records() const { return records_; }
  int completed_steps() const { return completed_steps_; }
  bool empty() const { return records_.empty(); }

 private:
  std::vector<TransitionRecord> records_;
  int completed_steps_ = 0;
};

// Per-episode reward bookkeeping. record(t, s) logs the reward earned at
// timestep t, i.e. the number of arms in state 1 when the actions were
// taken; time_avg(t) is the running mean of step rewards through t.
class RewardTrace {
 public:
  void record(int t, const SystemState& s);
  int steps() const { return static_cast<int>(step_.size()); }
  int step_reward(int t) const { return step_[t - 1]; }
  long long cum_reward(int t) const { return cum_[t - 1]; }
  double time_avg_reward(int t) const { return time_avg_[t - 1]; }

 private:
  std::vector<int> step_;
  std::vector<long long> cum_;
  std::vector<double> time_avg_;
};

// Samples the next system state. Each arm transitions independently to
// state 1 with probability instance.p(arm, t, s_arm, a_arm).
SystemState step(const RmabInstance& inst, int t, const SystemState& s,
                 const ActionVector& a, Rng& rng);

// Returns a human-readable list of invariant violations; empty means valid.
std::vector<std::string> validate_instance(const RmabInstance& inst);

nlohmann::json instance_to_json(const RmabInstance& inst);
RmabInstance instance_from_json(const nlohmann::json& j);

}  // namespace bcor
