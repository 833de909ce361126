#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bcor/rmab.hpp"

namespace bcor {

// Transition law of a single arm at a fixed effective time:
// p[s][a] = P(next state 1 | state s, action a).
struct ArmSnapshot {
  double p[2][2];
};

struct WhittleConfig {
  double gamma = 0.9;
  double vi_tol = 1e-6;     // value-iteration precision (see value_iteration)
  int vi_max_iters = 20000;
  double bs_tol = 1e-4;     // binary-search interval width
  double bracket_lo;
  double bracket_hi;

  // Step rewards lie in [0,1], so discounted value gaps are bounded by
  // 1/(1-gamma); the +-1 pad keeps the sign change strictly interior.
  explicit WhittleConfig(double g = 0.9)
      : gamma(g),
        bracket_lo(-1.0 / (1.0 - g) - 1.0),
        bracket_hi(1.0 / (1.0 - g) + 1.0) {}

  void validate() const;
};

struct QValues {
  double q[2][2];  // q[s][a]
  double v[2];     // v[s] = max_a q[s][a]
};

struct WhittleDiagnostics {
  long long vi_sweeps = 0;
  long long memo_hits = 0;
  long long early_skips = 0;
  long long indexability_failures = 0;
};

// Penalized Bellman solve: Q(s,a) = -m*a + s + gamma * E[V(next)], by value
// iteration until the sup-norm change is <= vi_tol*(1-gamma)/(2*gamma), which
// bounds the true fixed-point error by vi_tol. v0 (length 2) warm-starts.
QValues value_iteration(const ArmSnapshot& arm, double penalty,
                        const WhittleConfig& cfg,
                        WhittleDiagnostics* diag = nullptr,
                        const double* v0 = nullptr);

// Whittle index: the penalty equating active and passive Q-values in the
// given state, localized by bisection to an interval of width <= bs_tol.
// If the active/passive gap has no sign change over the bracket, returns the
// endpoint on whose side the gap lies and counts an indexability failure.
double whittle_index(const ArmSnapshot& arm, int state,
                     const WhittleConfig& cfg,
                     WhittleDiagnostics* diag = nullptr);

// Test oracle: dense scan of the penalty grid with an exact (policy
// iteration) Bellman solve; returns the smallest grid point in the default
// bracket whose gap is <= 0. *crossed reports whether a crossing was found.
double whittle_index_grid_oracle(const ArmSnapshot& arm, int state,
                                 double gamma, double grid_step,
                                 bool* crossed = nullptr);

// Exact solve of the penalized Bellman equation via policy iteration
// (closed-form 2x2 linear system per policy). Used by the grid oracle.
QValues solve_q_exact(const ArmSnapshot& arm, double penalty, double gamma);

// Pulls the B largest values; ties broken by lowest arm index.
ActionVector select_top_b(const std::vector<double>& values, int B);

// Cache of computed indices keyed on (quantized snapshot, state). Entries
// flagged exact came from a finished bisection; inexact entries record an
// upper bound from an early-terminated search.
class WhittleMemo {
 public:
  struct Entry {
    double value;
    bool exact;
  };

  const Entry* find(const ArmSnapshot& arm, int state) const;
  void store(const ArmSnapshot& arm, int state, double value, bool exact);
  std::size_t size() const { return map_.size(); }

 private:
  struct Key {
    std::int64_t q[4];
    int state;
    bool operator==(const Key& o) const {
      return state == o.state && q[0] == o.q[0] && q[1] == o.q[1] &&
             q[2] == o.q[2] && q[3] == o.q[3];
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  static Key make_key(const ArmSnapshot& arm, int state);

  std::unordered_map<Key, Entry, KeyHash> map_;
};

struct WhittlePolicyOptions {
  bool use_memo = true;
  bool early_termination = true;
};

// Top-B selection by Whittle index. With early termination, an arm whose
// index upper bound (the current bisection bracket top, or a cached bound)
// falls strictly below the B-th best exact index so far is skipped; skipped
// arms record the bound, which cannot alter the selection.
ActionVector whittle_policy(const std::vector<ArmSnapshot>& snapshots,
                            const SystemState& states, int B,
                            const WhittleConfig& cfg,
                            WhittleMemo* memo = nullptr,
                            WhittleDiagnostics* diag = nullptr,
                            const WhittlePolicyOptions& opts = {});

}  // namespace bcor
