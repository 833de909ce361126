#include "bcor/whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace bcor {

void WhittleConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("WhittleConfig: gamma must lie in (0,1)");
  if (!(vi_tol > 0.0) || !(bs_tol > 0.0))
    throw std::invalid_argument("WhittleConfig: tolerances must be positive");
  if (vi_max_iters <= 0)
    throw std::invalid_argument("WhittleConfig: vi_max_iters must be positive");
  if (!(bracket_lo < bracket_hi))
    throw std::invalid_argument("WhittleConfig: empty penalty bracket");
}

QValues value_iteration(const ArmSnapshot& arm, double penalty,
                        const WhittleConfig& cfg, WhittleDiagnostics* diag,
                        const double* v0) {
  cfg.validate();
  const double g = cfg.gamma;
  // Sup-norm change <= vi_tol*(1-g)/(2g) bounds ||V - V*|| by vi_tol/2.
  const double stop = cfg.vi_tol * (1.0 - g) / (2.0 * g);
  double v[2] = {0.0, 0.0};
  if (v0) {
    v[0] = v0[0];
    v[1] = v0[1];
  }
  QValues out{};
  for (int it = 0; it < cfg.vi_max_iters; ++it) {
    double delta = 0.0;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a)
        out.q[s][a] =
            -penalty * a + s + g * (arm.p[s][a] * v[1] + (1.0 - arm.p[s][a]) * v[0]);
      out.v[s] = std::max(out.q[s][0], out.q[s][1]);
    }
    delta = std::max(std::abs(out.v[0] - v[0]), std::abs(out.v[1] - v[1]));
    v[0] = out.v[0];
    v[1] = out.v[1];
    if (diag) ++diag->vi_sweeps;
    if (delta <= stop) return out;
  }
  throw std::runtime_error("value_iteration: no convergence within " +
                           std::to_string(cfg.vi_max_iters) + " sweeps");
}

namespace {

// Active/passive Q-gap in `state` at the given penalty; v carries the value
// function across calls so bisection sweeps warm-start each other.
double index_gap(const ArmSnapshot& arm, int state, double penalty,
                 const WhittleConfig& cfg, WhittleDiagnostics* diag,
                 double v[2]) {
  QValues q = value_iteration(arm, penalty, cfg, diag, v);
  v[0] = q.v[0];
  v[1] = q.v[1];
  return q.q[state][1] - q.q[state][0];
}

// Bisection for the index. When stop_below is given, the search aborts as
// soon as its upper bracket drops strictly below *stop_below; *bound_out then
// holds that still-valid upper bound and nullopt is returned.
std::optional<double> bisect_index(const ArmSnapshot& arm, int state,
                                   const WhittleConfig& cfg,
                                   WhittleDiagnostics* diag,
                                   const double* stop_below,
                                   double* bound_out) {
  cfg.validate();
  double v[2] = {0.0, 0.0};
  double lo = cfg.bracket_lo;
  double hi = cfg.bracket_hi;
  double g_lo = index_gap(arm, state, lo, cfg, diag, v);
  if (g_lo <= 0.0) {
    // Gap already closed at the bottom of the bracket: index <= lo.
    if (diag) ++diag->indexability_failures;
    return lo;
  }
  double g_hi = index_gap(arm, state, hi, cfg, diag, v);
  if (g_hi > 0.0) {
    if (diag) ++diag->indexability_failures;
    return hi;
  }
  while (hi - lo > cfg.bs_tol) {
    if (stop_below && hi < *stop_below) {
      *bound_out = hi;
      return std::nullopt;
    }
    double mid = 0.5 * (lo + hi);
    if (index_gap(arm, state, mid, cfg, diag, v) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double whittle_index(const ArmSnapshot& arm, int state,
                     const WhittleConfig& cfg, WhittleDiagnostics* diag) {
  return *bisect_index(arm, state, cfg, diag, nullptr, nullptr);
}

QValues solve_q_exact(const ArmSnapshot& arm, double penalty, double gamma) {
  int act[2] = {0, 0};  // current policy: action per state
  double v[2] = {0.0, 0.0};
  QValues out{};
  for (int it = 0; it < 8; ++it) {
    // Evaluate: V = r_pi + gamma * P_pi V, a 2x2 linear system.
    double p0 = arm.p[0][act[0]];
    double p1 = arm.p[1][act[1]];
    double r0 = 0.0 - penalty * act[0];
    double r1 = 1.0 - penalty * act[1];
    double a11 = 1.0 - gamma * (1.0 - p0), a12 = -gamma * p0;
    double a21 = -gamma * (1.0 - p1), a22 = 1.0 - gamma * p1;
    double det = a11 * a22 - a12 * a21;
    v[0] = (r0 * a22 - a12 * r1) / det;
    v[1] = (a11 * r1 - r0 * a21) / det;
    bool stable = true;
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a)
        out.q[s][a] = -penalty * a + s +
                      gamma * (arm.p[s][a] * v[1] + (1.0 - arm.p[s][a]) * v[0]);
      int best = out.q[s][1] > out.q[s][0] ? 1 : 0;
      if (best != act[s]) {
        act[s] = best;
        stable = false;
      }
      out.v[s] = std::max(out.q[s][0], out.q[s][1]);
    }
    if (stable) return out;
  }
  return out;  // policy iteration over 4 policies settles within the cap
}

double whittle_index_grid_oracle(const ArmSnapshot& arm, int state,
                                 double gamma, double grid_step,
                                 bool* crossed) {
  if (!(grid_step > 0.0))
    throw std::invalid_argument("grid oracle: grid_step must be positive");
  const double lo = -1.0 / (1.0 - gamma) - 1.0;
  const double hi = 1.0 / (1.0 - gamma) + 1.0;
  const long long n = static_cast<long long>(std::ceil((hi - lo) / grid_step));
  for (long long j = 0; j <= n; ++j) {
    double m = std::min(lo + j * grid_step, hi);
    QValues q = solve_q_exact(arm, m, gamma);
    if (q.q[state][1] - q.q[state][0] <= 0.0) {
      if (crossed) *crossed = true;
      return m;
    }
  }
  if (crossed) *crossed = false;
  return hi;
}

ActionVector select_top_b(const std::vector<double>& values, int B) {
  int n = static_cast<int>(values.size());
  if (B < 0 || B > n)
    throw std::invalid_argument("select_top_b: need 0 <= B <= N");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] > values[b]; });
  ActionVector act(n, 0);
  for (int i = 0; i < B; ++i) act[order[i]] = 1;
  return act;
}

std::size_t WhittleMemo::KeyHash::operator()(const Key& k) const {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = mix(static_cast<std::uint64_t>(k.state));
  for (int i = 0; i < 4; ++i) h = mix(h ^ static_cast<std::uint64_t>(k.q[i]));
  return static_cast<std::size_t>(h);
}

WhittleMemo::Key WhittleMemo::make_key(const ArmSnapshot& arm, int state) {
  // 12-decimal-digit quantization: exact-key hits only for genuinely
  // repeated snapshots, immune to float-formatting noise.
  Key k;
  k.state = state;
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a)
      k.q[s * 2 + a] = std::llround(arm.p[s][a] * 1e12);
  return k;
}

const WhittleMemo::Entry* WhittleMemo::find(const ArmSnapshot& arm,
                                            int state) const {
  auto it = map_.find(make_key(arm, state));
  return it == map_.end() ? nullptr : &it->second;
}

void WhittleMemo::store(const ArmSnapshot& arm, int state, double value,
                        bool exact) {
  map_[make_key(arm, state)] = Entry{value, exact};
}

ActionVector whittle_policy(const std::vector<ArmSnapshot>& snapshots,
                            const SystemState& states, int B,
                            const WhittleConfig& cfg, WhittleMemo* memo,
                            WhittleDiagnostics* diag,
                            const WhittlePolicyOptions& opts) {
  int n = static_cast<int>(snapshots.size());
  if (static_cast<int>(states.size()) != n)
    throw std::invalid_argument("whittle_policy: state/snapshot length mismatch");
  if (B < 1 || B > n)
    throw std::invalid_argument("whittle_policy: need 1 <= B <= N");
  std::vector<double> values(n);
  // Min-heap over the best B *exact* indices seen so far; its top is the
  // skip threshold for early termination.
  std::priority_queue<double, std::vector<double>, std::greater<double>> best;
  auto note_exact = [&](double x) {
    if (static_cast<int>(best.size()) < B)
      best.push(x);
    else if (x > best.top()) {
      best.pop();
      best.push(x);
    }
  };
  for (int i = 0; i < n; ++i) {
    const ArmSnapshot& arm = snapshots[i];
    int s = states[i];
    double kth = 0.0;
    bool have_kth = static_cast<int>(best.size()) == B;
    if (have_kth) kth = best.top();
    if (opts.use_memo && memo) {
      if (const WhittleMemo::Entry* e = memo->find(arm, s)) {
        if (e->exact) {
          if (diag) ++diag->memo_hits;
          values[i] = e->value;
          note_exact(e->value);
          continue;
        }
        if (opts.early_termination && have_kth && e->value < kth) {
          if (diag) {
            ++diag->memo_hits;
            ++diag->early_skips;
          }
          values[i] = e->value;
          continue;
        }
      }
    }
    double bound = 0.0;
    const double* stop = nullptr;
    if (opts.early_termination && have_kth) stop = &kth;
    auto res = bisect_index(arm, s, cfg, diag, stop, &bound);
    if (res) {
      values[i] = *res;
      note_exact(*res);
      if (opts.use_memo && memo) memo->store(arm, s, *res, true);
    } else {
      if (diag) ++diag->early_skips;
      values[i] = bound;
      if (opts.use_memo && memo) memo->store(arm, s, bound, false);
    }
  }
  return select_top_b(values, B);
}

}  // namespace bcor
