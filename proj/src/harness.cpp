#include "bcor/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bcor {

void ExperimentConfig::validate() const {
  if (n_arms < 1 || horizon < 1)
    throw std::invalid_argument("config: n_arms and horizon must be >= 1");
  if (budget < 1 || budget > n_arms)
    throw std::invalid_argument("config: need 1 <= budget <= n_arms");
  if (seeds.empty()) throw std::invalid_argument("config: seeds empty");
  std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
  if (uniq.size() != seeds.size())
    throw std::invalid_argument("config: duplicate seeds");
  if (learners.empty()) throw std::invalid_argument("config: learners empty");
  const auto& reg = learner_registry();
  for (const auto& id : learners)
    if (std::find(reg.begin(), reg.end(), id) == reg.end())
      throw std::invalid_argument("config: unknown learner: " + id);
  hyper.validate();
  mcmc.validate();
  whittle.validate();
  if (!(ucw_scale > 0))
    throw std::invalid_argument("config: ucw_scale must be positive");
}

namespace {

void reject_unknown_keys(const nlohmann::json& j,
                         const std::vector<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key \"" + it.key() +
                                  "\" in " + where);
}

void parse_var22(const nlohmann::json& j, double (&out)[2][2]) {
  if (j.is_number()) {
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) out[s][a] = j.get<double>();
    return;
  }
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) out[s][a] = j.at(s).at(a).get<double>();
}

HyperParams hyper_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"tau0", "sigma0", "var_mu", "var_b0", "var_b1",
                       "var_beta", "var_eta"},
                      "hyper");
  HyperParams h;
  if (j.contains("tau0")) h.tau0 = j.at("tau0").get<double>();
  if (j.contains("sigma0")) h.sigma0 = j.at("sigma0").get<double>();
  if (j.contains("var_mu")) h.var_mu = j.at("var_mu").get<double>();
  if (j.contains("var_b0")) h.var_b0 = j.at("var_b0").get<double>();
  if (j.contains("var_b1")) h.var_b1 = j.at("var_b1").get<double>();
  if (j.contains("var_beta")) parse_var22(j.at("var_beta"), h.var_beta);
  if (j.contains("var_eta")) parse_var22(j.at("var_eta"), h.var_eta);
  return h;
}

McmcConfig mcmc_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, {"n_warmup", "n_rewarmup", "n_keep", "thin", "warm_start"}, "mcmc");
  McmcConfig m;
  if (j.contains("n_warmup")) m.n_warmup = j.at("n_warmup").get<int>();
  if (j.contains("n_rewarmup")) m.n_rewarmup = j.at("n_rewarmup").get<int>();
  if (j.contains("n_keep")) m.n_keep = j.at("n_keep").get<int>();
  if (j.contains("thin")) m.thin = j.at("thin").get<int>();
  if (j.contains("warm_start")) m.warm_start = j.at("warm_start").get<bool>();
  return m;
}

WhittleConfig whittle_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"gamma", "vi_tol", "vi_max_iters", "bs_tol",
                       "bracket_lo", "bracket_hi"},
                      "whittle");
  WhittleConfig w(j.contains("gamma") ? j.at("gamma").get<double>() : 0.9);
  if (j.contains("vi_tol")) w.vi_tol = j.at("vi_tol").get<double>();
  if (j.contains("vi_max_iters"))
    w.vi_max_iters = j.at("vi_max_iters").get<int>();
  if (j.contains("bs_tol")) w.bs_tol = j.at("bs_tol").get<double>();
  if (j.contains("bracket_lo")) w.bracket_lo = j.at("bracket_lo").get<double>();
  if (j.contains("bracket_hi")) w.bracket_hi = j.at("bracket_hi").get<double>();
  return w;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"setting", "n_arms", "horizon", "budget", "k", "d",
                       "seeds", "learners", "hyper", "mcmc", "whittle",
                       "ucw_scale", "output", "instance_path"},
                      "config");
  ExperimentConfig cfg;
  if (j.contains("setting"))
    cfg.setting = parse_setting(j.at("setting").get<std::string>());
  cfg.n_arms = j.at("n_arms").get<int>();
  cfg.horizon = j.at("horizon").get<int>();
  cfg.budget = j.at("budget").get<int>();
  if (j.contains("k")) cfg.k = j.at("k").get<int>();
  if (j.contains("d")) cfg.d = j.at("d").get<int>();
  const auto& seeds = j.at("seeds");
  if (seeds.is_array()) {
    for (const auto& s : seeds) cfg.seeds.push_back(s.get<std::uint64_t>());
  } else {
    reject_unknown_keys(seeds, {"start", "count"}, "seeds");
    std::uint64_t start = seeds.at("start").get<std::uint64_t>();
    std::uint64_t count = seeds.at("count").get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) cfg.seeds.push_back(start + i);
  }
  cfg.learners = j.at("learners").get<std::vector<std::string>>();
  if (j.contains("hyper")) cfg.hyper = hyper_from_json(j.at("hyper"));
  if (j.contains("mcmc")) cfg.mcmc = mcmc_from_json(j.at("mcmc"));
  if (j.contains("whittle")) cfg.whittle = whittle_from_json(j.at("whittle"));
  if (j.contains("ucw_scale")) cfg.ucw_scale = j.at("ucw_scale").get<double>();
  if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
  if (j.contains("instance_path"))
    cfg.instance_path = j.at("instance_path").get<std::string>();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

RmabInstance instance_for_seed(const ExperimentConfig& cfg,
                               std::uint64_t seed) {
  if (!cfg.instance_path.empty()) {
    std::ifstream in(cfg.instance_path);
    if (!in)
      throw std::runtime_error("cannot open instance: " + cfg.instance_path);
    nlohmann::json j;
    in >> j;
    return instance_from_json(j);
  }
  Rng rng = Rng::substream(seed, "instance");
  return gen_instance(cfg.setting, cfg.n_arms, cfg.horizon, cfg.budget,
                      CovariateSpec::for_k(cfg.k), SplineSpec{3, cfg.d},
                      cfg.hyper, seed, rng);
}

SystemState initial_state(std::uint64_t seed, int n) {
  Rng rng = Rng::substream(seed, "init");
  SystemState s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.bernoulli(0.5);
  return s;
}

RewardTrace run_episode(Learner& learner, const RmabInstance& inst,
                        const SystemState& init, Rng env_rng) {
  RewardTrace trace;
  SystemState s = init;
  for (int t = 1; t <= inst.horizon; ++t) {
    ActionVector a = learner.act(t, s);
    SystemState next = step(inst, t, s, a, env_rng);
    learner.observe(t, s, a, next);
    trace.record(t, s);
    s = std::move(next);
  }
  return trace;
}

RewardTrace run_episode(const std::string& learner_id, const RmabInstance& inst,
                        std::uint64_t seed, const ExperimentConfig& cfg) {
  LearnerContext ctx;
  ctx.n_arms = inst.n_arms;
  ctx.horizon = inst.horizon;
  ctx.budget = inst.budget;
  ctx.X = &inst.covariates;
  ctx.M = &inst.spline_basis;
  ctx.instance = &inst;
  ctx.hyper = cfg.hyper;
  ctx.mcmc = cfg.mcmc;
  ctx.whittle = cfg.whittle;
  ctx.ucw_scale = cfg.ucw_scale;
  auto learner = make_learner(learner_id, ctx,
                              Rng::substream(seed, "learner/" + learner_id));
  return run_episode(*learner, inst, initial_state(seed, inst.n_arms),
                     Rng::substream(seed, "env"));
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg,
                                      int workers) {
  cfg.validate();
  if (workers < 1) throw std::invalid_argument("run_experiment: workers >= 1");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  std::vector<std::string> learners = cfg.learners;
  std::sort(learners.begin(), learners.end());

  // records slot per (seed, learner); workers own disjoint slots.
  std::vector<std::vector<RunRecord>> slots(seeds.size() * learners.size());
  std::atomic<std::size_t> next_seed{0};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto work = [&]() {
    for (;;) {
      std::size_t si = next_seed.fetch_add(1);
      if (si >= seeds.size()) return;
      {
        std::lock_guard<std::mutex> lk(err_mu);
        if (first_error) return;
      }
      try {
        std::uint64_t seed = seeds[si];
        RmabInstance inst = instance_for_seed(cfg, seed);
        for (std::size_t li = 0; li < learners.size(); ++li) {
          RewardTrace trace = run_episode(learners[li], inst, seed, cfg);
          auto& slot = slots[si * learners.size() + li];
          slot.reserve(trace.steps());
          for (int t = 1; t <= trace.steps(); ++t)
            slot.push_back({seed, learners[li], t, trace.step_reward(t),
                            trace.time_avg_reward(t), trace.cum_reward(t)});
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    int n_threads = std::min<std::size_t>(workers, seeds.size());
    for (int w = 0; w < n_threads; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<RunRecord> records;
  records.reserve(seeds.size() * learners.size() * cfg.horizon);
  for (const auto& slot : slots)
    records.insert(records.end(), slot.begin(), slot.end());
  return records;
}

namespace {

std::string fmt_double(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    std::size_t c = line.find(',', pos);
    if (c == std::string::npos) {
      out.push_back(line.substr(pos));
      return out;
    }
    out.push_back(line.substr(pos, c - pos));
    pos = c + 1;
  }
}

}  // namespace

void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << "seed,learner,t,step_reward,time_avg_reward,cum_reward\n";
  for (const auto& r : records)
    out << r.seed << ',' << r.learner << ',' << r.t << ',' << r.step_reward
        << ',' << fmt_double(r.time_avg_reward, 17) << ',' << r.cum_reward
        << '\n';
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line != "seed,learner,t,step_reward,time_avg_reward,cum_reward")
    throw std::runtime_error("runs csv: bad header");
  std::vector<RunRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 6) throw std::runtime_error("runs csv: bad row: " + line);
    RunRecord r;
    r.seed = std::stoull(f[0]);
    r.learner = f[1];
    r.t = std::stoi(f[2]);
    r.step_reward = std::stoi(f[3]);
    r.time_avg_reward = std::stod(f[4]);
    r.cum_reward = std::stoll(f[5]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                    const std::string& center_on) {
  std::map<std::pair<std::uint64_t, int>, double> center;  // (seed,t) -> value
  for (const auto& r : records)
    if (r.learner == center_on) center[{r.seed, r.t}] = r.time_avg_reward;
  if (center.empty())
    throw std::invalid_argument("aggregate: centering learner \"" + center_on +
                                "\" absent from records");
  // (learner, t) -> paired samples in seed order.
  std::map<std::pair<std::string, int>, std::vector<std::pair<double, double>>>
      groups;
  for (const auto& r : records) {
    auto it = center.find({r.seed, r.t});
    if (it == center.end())
      throw std::invalid_argument(
          "aggregate: centering learner missing at seed " +
          std::to_string(r.seed) + ", t " + std::to_string(r.t));
    groups[{r.learner, r.t}].push_back({r.time_avg_reward, it->second});
  }
  auto mean_se = [](const std::vector<double>& v) {
    int n = static_cast<int>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double se = 0.0;
    if (n > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      se = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
    }
    return std::pair<double, double>(mean, se);
  };
  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [key, samples] : groups) {
    std::vector<double> raw, diff;
    raw.reserve(samples.size());
    diff.reserve(samples.size());
    for (const auto& [v, c] : samples) {
      raw.push_back(v);
      diff.push_back(v - c);
    }
    auto [m, se] = mean_se(raw);
    auto [mc, sec] = mean_se(diff);
    rows.push_back({key.first, key.second, m, se, mc, sec,
                    static_cast<int>(samples.size())});
  }
  return rows;  // map iteration is already (learner, t) sorted
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows,
                         std::ostream& out) {
  out << "learner,t,mean_time_avg,se_time_avg,mean_centered,se_centered,"
         "n_seeds\n";
  for (const auto& r : rows)
    out << r.learner << ',' << r.t << ',' << fmt_double(r.mean_time_avg, 17)
        << ',' << fmt_double(r.se_time_avg, 17) << ','
        << fmt_double(r.mean_centered, 17) << ','
        << fmt_double(r.se_centered, 17) << ',' << r.n_seeds << '\n';
}

std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      line !=
          "learner,t,mean_time_avg,se_time_avg,mean_centered,se_centered,"
          "n_seeds")
    throw std::runtime_error("aggregate csv: bad header");
  std::vector<AggregateRow> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7)
      throw std::runtime_error("aggregate csv: bad row: " + line);
    AggregateRow r;
    r.learner = f[0];
    r.t = std::stoi(f[1]);
    r.mean_time_avg = std::stod(f[2]);
    r.se_time_avg = std::stod(f[3]);
    r.mean_centered = std::stod(f[4]);
    r.se_centered = std::stod(f[5]);
    r.n_seeds = std::stoi(f[6]);
    out.push_back(std::move(r));
  }
  return out;
}

void emit_plot_data(const std::vector<AggregateRow>& rows, std::ostream& out) {
  if (rows.empty()) throw std::invalid_argument("emit_plot_data: no rows");
  std::vector<AggregateRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const AggregateRow& a, const AggregateRow& b) {
                     return a.learner != b.learner ? a.learner < b.learner
                                                   : a.t < b.t;
                   });
  out << "learner,t,centered_mean,centered_lo,centered_hi\n";
  for (const auto& r : sorted)
    out << r.learner << ',' << r.t << ',' << fmt_double(r.mean_centered, 10)
        << ',' << fmt_double(r.mean_centered - 2.0 * r.se_centered, 10) << ','
        << fmt_double(r.mean_centered + 2.0 * r.se_centered, 10) << '\n';
}

}  // namespace bcor
