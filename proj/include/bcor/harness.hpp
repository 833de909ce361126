#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bcor/instance_gen.hpp"
#include "bcor/learners.hpp"
#include "bcor/rmab.hpp"
#include "json.hpp"

namespace bcor {

struct ExperimentConfig {
  GenSetting setting = GenSetting::well_specified;
  int n_arms = 0;
  int horizon = 0;
  int budget = 0;
  int k = 4;
  int d = 4;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> learners;
  HyperParams hyper;
  McmcConfig mcmc;
  WhittleConfig whittle;
  double ucw_scale = 1.0;
  std::string output = "runs.csv";
  std::string instance_path;  // optional: load instead of generating

  void validate() const;
};

// Single JSON document mirroring the field names above; unknown keys are an
// error. "seeds" is either an integer list or {"start", "count"}.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct RunRecord {
  std::uint64_t seed;
  std::string learner;
  int t;
  int step_reward;
  double time_avg_reward;
  long long cum_reward;
};

struct AggregateRow {
  std::string learner;
  int t;
  double mean_time_avg;
  double se_time_avg;
  double mean_centered;
  double se_centered;
  int n_seeds;
};

// Instance for one seed: generated from the seed's "instance" substream, or
// loaded from config.instance_path when set.
RmabInstance instance_for_seed(const ExperimentConfig& cfg, std::uint64_t seed);

// Shared per-seed initial state, each arm Bernoulli(0.5).
SystemState initial_state(std::uint64_t seed, int n);

// One episode: t = 1..T of act / step / observe / record. The environment
// stream and the learner stream are independent substreams of the seed, and
// every learner replays the identical environment stream.
RewardTrace run_episode(Learner& learner, const RmabInstance& inst,
                        const SystemState& init, Rng env_rng);

// Episode for a registered learner id with the canonical substream layout.
RewardTrace run_episode(const std::string& learner_id,
                        const RmabInstance& inst, std::uint64_t seed,
                        const ExperimentConfig& cfg);

// All configured (seed, learner) episodes, parallel over seeds; records
// sorted by (seed, learner, t) regardless of worker count.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      int workers = 1);

void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out);
std::vector<RunRecord> read_runs_csv(std::istream& in);

// Per (learner, t) mean/SE of the time-averaged reward over seeds, plus the
// seed-paired difference against the centering learner.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                    const std::string& center_on = "random");

void write_aggregate_csv(const std::vector<AggregateRow>& rows,
                         std::ostream& out);
std::vector<AggregateRow> read_aggregate_csv(std::istream& in);

// Plot-ready table: centered mean and the +-2 SE band, 10 significant
// digits, rows ordered by (learner, t).
void emit_plot_data(const std::vector<AggregateRow>& rows, std::ostream& out);

}  // namespace bcor
