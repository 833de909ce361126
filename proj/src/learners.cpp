#include "bcor/learners.hpp"

#include <cmath>
#include <stdexcept>

namespace bcor {

ActionVector random_act(int B, int n, Rng& rng) {
  if (B < 1 || B > n) throw std::invalid_argument("random_act: need 1 <= B <= N");
  ActionVector act(n, 0);
  for (int i : rng.subset(n, B)) act[i] = 1;
  return act;
}

ActionVector greedy_act(const SystemState& state,
                        const std::vector<ArmSnapshot>& estimates, int B) {
  int n = static_cast<int>(estimates.size());
  if (static_cast<int>(state.size()) != n)
    throw std::invalid_argument("greedy_act: state/estimate length mismatch");
  std::vector<double> te(n);
  for (int i = 0; i < n; ++i)
    te[i] = estimates[i].p[state[i]][1] - estimates[i].p[state[i]][0];
  return select_top_b(te, B);
}

std::vector<ArmSnapshot> oracle_summarize(const RmabInstance& inst, int t,
                                          OracleKind kind) {
  if (t < 1 || t > inst.horizon)
    throw std::invalid_argument("oracle_summarize: t outside horizon");
  int upto = t;
  switch (kind) {
    case OracleKind::current_time:
    case OracleKind::greedy:
      upto = 0;  // instantaneous law
      break;
    case OracleKind::time_average:
      upto = inst.horizon;
      break;
    case OracleKind::cumulative_average:
      upto = t;
      break;
  }
  std::vector<ArmSnapshot> out(inst.n_arms);
  for (int i = 0; i < inst.n_arms; ++i)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        if (upto == 0) {
          out[i].p[s][a] = inst.p(i, t, s, a);
          continue;
        }
        // Mean over 1..upto; collapses exactly to the common value when the
        // law is constant over time (stationary instances).
        double first = inst.p(i, 1, s, a);
        double sum = 0.0;
        bool constant = true;
        for (int j = 1; j <= upto; ++j) {
          double p = inst.p(i, j, s, a);
          constant = constant && p == first;
          sum += p;
        }
        out[i].p[s][a] = constant ? first : sum / upto;
      }
  return out;
}

TsLearner::TsLearner(int n, int B, PolicyKind policy, const WhittleConfig& cfg,
                     Rng rng)
    : n_(n), b_(B), policy_(policy), cfg_(cfg), rng_(rng) {
  counts_.assign(n, {});
}

ActionVector TsLearner::act(int, const SystemState& state) {
  std::vector<ArmSnapshot> snaps(n_);
  for (int i = 0; i < n_; ++i)
    for (int sa = 0; sa < 4; ++sa)
      snaps[i].p[sa / 2][sa % 2] =
          rng_.beta(1.0 + counts_[i][sa][0], 1.0 + counts_[i][sa][1]);
  if (policy_ == PolicyKind::greedy) return greedy_act(state, snaps, b_);
  return whittle_policy(snaps, state, b_, cfg_, &memo_, &diag_);
}

void TsLearner::observe(int, const SystemState& state, const ActionVector& a,
                        const SystemState& next) {
  for (int i = 0; i < n_; ++i)
    ++counts_[i][state[i] * 2 + a[i]][next[i] == 1 ? 0 : 1];
}

UcwLearner::UcwLearner(int n, int T, int B, double c, const WhittleConfig& cfg,
                       Rng rng)
    : n_(n), horizon_(T), b_(B), c_(c), cfg_(cfg), rng_(rng) {
  counts_.assign(n, {});
}

ActionVector UcwLearner::act(int, const SystemState& state) {
  double log_term = std::log(2.0 * n_ * horizon_ * 4.0);
  std::vector<ArmSnapshot> snaps(n_);
  for (int i = 0; i < n_; ++i)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        long n_sa = counts_[i][s * 2 + a][0];
        long succ = counts_[i][s * 2 + a][1];
        double denom = std::max(n_sa, 1L);
        double p_hat = succ / denom;
        double radius = c_ * std::sqrt(log_term / denom);
        // Index-raising direction under R(s,a)=s: optimistic active,
        // pessimistic passive.
        snaps[i].p[s][a] = a == 1 ? std::min(1.0, p_hat + radius)
                                  : std::max(0.0, p_hat - radius);
      }
  return whittle_policy(snaps, state, b_, cfg_, &memo_, &diag_);
}

void UcwLearner::observe(int, const SystemState& state, const ActionVector& a,
                         const SystemState& next) {
  for (int i = 0; i < n_; ++i) {
    auto& c = counts_[i][state[i] * 2 + a[i]];
    ++c[0];
    if (next[i] == 1) ++c[1];
  }
}

BcorLearner::BcorLearner(int n, int B, Eigen::MatrixXd X, Eigen::MatrixXd M,
                         const HyperParams& hyper, const McmcConfig& mcmc,
                         PolicyKind policy, const WhittleConfig& cfg, Rng rng)
    : n_(n),
      b_(B),
      x_(std::move(X)),
      m_(std::move(M)),
      hyper_(hyper),
      mcmc_(mcmc),
      policy_(policy),
      cfg_(cfg),
      rng_(rng) {
  if (x_.rows() != n_) throw std::invalid_argument("BcorLearner: X rows != N");
}

ActionVector BcorLearner::act(int t, const SystemState& state) {
  if (history_.empty()) return random_act(b_, n_, rng_);
  PosteriorDraw draw = posterior_sample(history_, x_, m_, hyper_, mcmc_, rng_,
                                        &chain_);
  auto snaps = transitions_from_draw(draw, x_, m_, t);
  if (policy_ == PolicyKind::greedy) return greedy_act(state, snaps, b_);
  return whittle_policy(snaps, state, b_, cfg_, &memo_, &diag_);
}

void BcorLearner::observe(int t, const SystemState& state,
                          const ActionVector& a, const SystemState& next) {
  history_.append_step(t, state, a, next);
}

OracleLearner::OracleLearner(const RmabInstance& inst, OracleKind kind,
                             const WhittleConfig& cfg)
    : inst_(&inst), kind_(kind), cfg_(cfg) {}

ActionVector OracleLearner::act(int t, const SystemState& state) {
  auto snaps = oracle_summarize(*inst_, t, kind_);
  if (kind_ == OracleKind::greedy)
    return greedy_act(state, snaps, inst_->budget);
  return whittle_policy(snaps, state, inst_->budget, cfg_, &memo_, &diag_);
}

const std::vector<std::string>& learner_registry() {
  static const std::vector<std::string> ids = {
      "bcor-whittle",  "bcor-greedy",           "ts-whittle",
      "ts-greedy",     "ucw-whittle",           "random",
      "oracle-whittle-current", "oracle-whittle-timeavg",
      "oracle-whittle-cumavg",  "oracle-greedy"};
  return ids;
}

std::unique_ptr<Learner> make_learner(const std::string& id,
                                      const LearnerContext& ctx, Rng rng) {
  auto need_xm = [&]() {
    if (!ctx.X || !ctx.M)
      throw std::invalid_argument("make_learner: " + id + " requires X and M");
  };
  auto need_instance = [&]() -> const RmabInstance& {
    if (!ctx.instance)
      throw std::invalid_argument("make_learner: " + id +
                                  " requires the true instance");
    return *ctx.instance;
  };
  if (id == "bcor-whittle" || id == "bcor-greedy") {
    need_xm();
    PolicyKind pk =
        id == "bcor-greedy" ? PolicyKind::greedy : PolicyKind::whittle;
    return std::make_unique<BcorLearner>(ctx.n_arms, ctx.budget, *ctx.X,
                                         *ctx.M, ctx.hyper, ctx.mcmc, pk,
                                         ctx.whittle, rng);
  }
  if (id == "ts-whittle" || id == "ts-greedy") {
    PolicyKind pk =
        id == "ts-greedy" ? PolicyKind::greedy : PolicyKind::whittle;
    return std::make_unique<TsLearner>(ctx.n_arms, ctx.budget, pk, ctx.whittle,
                                       rng);
  }
  if (id == "ucw-whittle")
    return std::make_unique<UcwLearner>(ctx.n_arms, ctx.horizon, ctx.budget,
                                        ctx.ucw_scale, ctx.whittle, rng);
  if (id == "random")
    return std::make_unique<RandomLearner>(ctx.n_arms, ctx.budget, rng);
  if (id == "oracle-whittle-current")
    return std::make_unique<OracleLearner>(need_instance(),
                                           OracleKind::current_time,
                                           ctx.whittle);
  if (id == "oracle-whittle-timeavg")
    return std::make_unique<OracleLearner>(need_instance(),
                                           OracleKind::time_average,
                                           ctx.whittle);
  if (id == "oracle-whittle-cumavg")
    return std::make_unique<OracleLearner>(need_instance(),
                                           OracleKind::cumulative_average,
                                           ctx.whittle);
  if (id == "oracle-greedy")
    return std::make_unique<OracleLearner>(need_instance(), OracleKind::greedy,
                                           ctx.whittle);
  throw std::invalid_argument("make_learner: unknown learner id: " + id);
}

}  // namespace bcor
