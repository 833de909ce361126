#include "bcor/rmab.hpp"

#include <numeric>
#include <stdexcept>

namespace bcor {

namespace {

void check_state(const SystemState& s, int n, const char* what) {
  if (static_cast<int>(s.size()) != n)
    throw std::invalid_argument(std::string(what) + ": wrong length");
  for (int v : s)
    if (v != 0 && v != 1)
      throw std::invalid_argument(std::string(what) + ": entries must be 0/1");
}

}  // namespace

void History::append_step(int t, const SystemState& s, const ActionVector& a,
                          const SystemState& next) {
  if (t != completed_steps_ + 1)
    throw std::invalid_argument("History::append_step: non-consecutive t");
  int n = static_cast<int>(s.size());
  check_state(s, n, "History state");
  check_state(next, n, "History next state");
  check_state(a, n, "History action");
  for (int i = 0; i < n; ++i)
    records_.push_back({i, t, s[i], a[i], next[i]});
  completed_steps_ = t;
}

void RewardTrace::record(int t, const SystemState& s) {
  if (t != steps() + 1)
    throw std::invalid_argument("RewardTrace::record: non-consecutive t");
  int r = std::accumulate(s.begin(), s.end(), 0);
  long long cum = (cum_.empty() ? 0LL : cum_.back()) + r;
  step_.push_back(r);
  cum_.push_back(cum);
  time_avg_.push_back(static_cast<double>(cum) / t);
}

SystemState step(const RmabInstance& inst, int t, const SystemState& s,
                 const ActionVector& a, Rng& rng) {
  if (t < 1 || t > inst.horizon)
    throw std::invalid_argument("step: t outside horizon");
  check_state(s, inst.n_arms, "step state");
  check_state(a, inst.n_arms, "step action");
  int used = std::accumulate(a.begin(), a.end(), 0);
  if (used != inst.budget)
    throw std::invalid_argument("step: action does not use exactly B pulls");
  SystemState next(inst.n_arms);
  for (int i = 0; i < inst.n_arms; ++i)
    next[i] = rng.bernoulli(inst.p(i, t, s[i], a[i]));
  return next;
}

std::vector<std::string> validate_instance(const RmabInstance& inst) {
  std::vector<std::string> bad;
  if (inst.n_arms < 1) bad.push_back("n_arms must be >= 1");
  if (inst.horizon < 1) bad.push_back("horizon must be >= 1");
  if (inst.budget < 1 || inst.budget > inst.n_arms)
    bad.push_back("budget must satisfy 1 <= B <= n_arms");
  if (!bad.empty()) return bad;
  if (inst.covariates.rows() != inst.n_arms)
    bad.push_back("covariates must have one row per arm");
  if (inst.spline_basis.rows() != inst.horizon)
    bad.push_back("spline_basis must have one row per timestep");
  std::size_t want = static_cast<std::size_t>(inst.n_arms) * inst.horizon * 4;
  if (inst.transitions.size() != want) {
    bad.push_back("transitions must have n_arms*horizon*2*2 entries");
    return bad;
  }
  for (int i = 0; i < inst.n_arms; ++i)
    for (int t = 1; t <= inst.horizon; ++t)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) {
          double p = inst.p(i, t, s, a);
          if (!(p >= 0.0 && p <= 1.0))
            bad.push_back("transitions[" + std::to_string(i) + "][" +
                          std::to_string(t) + "][" + std::to_string(s) + "][" +
                          std::to_string(a) + "] outside [0,1]");
        }
  return bad;
}

nlohmann::json instance_to_json(const RmabInstance& inst) {
  nlohmann::json j;
  j["n_arms"] = inst.n_arms;
  j["horizon"] = inst.horizon;
  j["budget"] = inst.budget;
  j["k"] = inst.k();
  j["d"] = inst.d();
  auto trans = nlohmann::json::array();
  for (int i = 0; i < inst.n_arms; ++i) {
    auto per_t = nlohmann::json::array();
    for (int t = 1; t <= inst.horizon; ++t) {
      per_t.push_back({{inst.p(i, t, 0, 0), inst.p(i, t, 0, 1)},
                       {inst.p(i, t, 1, 0), inst.p(i, t, 1, 1)}});
    }
    trans.push_back(std::move(per_t));
  }
  j["transitions"] = std::move(trans);
  auto cov = nlohmann::json::array();
  for (int i = 0; i < inst.covariates.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < inst.covariates.cols(); ++c)
      row.push_back(inst.covariates(i, c));
    cov.push_back(std::move(row));
  }
  j["covariates"] = std::move(cov);
  auto spl = nlohmann::json::array();
  for (int t = 0; t < inst.spline_basis.rows(); ++t) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < inst.spline_basis.cols(); ++c)
      row.push_back(inst.spline_basis(t, c));
    spl.push_back(std::move(row));
  }
  j["spline_basis"] = std::move(spl);
  j["meta"] = {{"setting", inst.meta.setting}, {"seed", inst.meta.seed}};
  return j;
}

RmabInstance instance_from_json(const nlohmann::json& j) {
  for (const char* key : {"n_arms", "horizon", "budget", "k", "d",
                          "transitions", "covariates", "spline_basis", "meta"})
    if (!j.contains(key))
      throw std::invalid_argument(std::string("instance json missing key: ") +
                                  key);
  RmabInstance inst;
  inst.n_arms = j.at("n_arms").get<int>();
  inst.horizon = j.at("horizon").get<int>();
  inst.budget = j.at("budget").get<int>();
  int k = j.at("k").get<int>();
  int d = j.at("d").get<int>();
  const auto& trans = j.at("transitions");
  if (static_cast<int>(trans.size()) != inst.n_arms)
    throw std::invalid_argument("instance json: transitions arm count");
  inst.transitions.resize(static_cast<std::size_t>(inst.n_arms) *
                          inst.horizon * 4);
  for (int i = 0; i < inst.n_arms; ++i) {
    const auto& per_t = trans.at(i);
    if (static_cast<int>(per_t.size()) != inst.horizon)
      throw std::invalid_argument("instance json: transitions horizon");
    for (int t = 1; t <= inst.horizon; ++t)
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
          inst.p(i, t, s, a) = per_t.at(t - 1).at(s).at(a).get<double>();
  }
  const auto& cov = j.at("covariates");
  if (static_cast<int>(cov.size()) != inst.n_arms)
    throw std::invalid_argument("instance json: covariates row count");
  inst.covariates.resize(inst.n_arms, k);
  for (int i = 0; i < inst.n_arms; ++i) {
    if (static_cast<int>(cov.at(i).size()) != k)
      throw std::invalid_argument("instance json: covariates column count");
    for (int c = 0; c < k; ++c)
      inst.covariates(i, c) = cov.at(i).at(c).get<double>();
  }
  const auto& spl = j.at("spline_basis");
  if (static_cast<int>(spl.size()) != inst.horizon)
    throw std::invalid_argument("instance json: spline_basis row count");
  inst.spline_basis.resize(inst.horizon, d);
  for (int t = 0; t < inst.horizon; ++t) {
    if (static_cast<int>(spl.at(t).size()) != d)
      throw std::invalid_argument("instance json: spline_basis column count");
    for (int c = 0; c < d; ++c)
      inst.spline_basis(t, c) = spl.at(t).at(c).get<double>();
  }
  inst.meta.setting = j.at("meta").at("setting").get<std::string>();
  inst.meta.seed = j.at("meta").at("seed").get<std::uint64_t>();
  auto bad = validate_instance(inst);
  if (!bad.empty())
    throw std::invalid_argument("instance json invalid: " + bad.front());
  return inst;
}

}  // namespace bcor
