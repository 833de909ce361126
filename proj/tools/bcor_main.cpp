#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bcor/harness.hpp"
#include "bcor/spline.hpp"
#include "bcor/stats.hpp"

namespace {

using namespace bcor;

void apply_overrides(ExperimentConfig& cfg, const std::string& out,
                     long long seed_start, long long seed_count,
                     const std::string& learners) {
  if (!out.empty()) cfg.output = out;
  if (seed_start >= 0 || seed_count >= 0) {
    std::uint64_t start =
        seed_start >= 0 ? static_cast<std::uint64_t>(seed_start)
                        : (cfg.seeds.empty() ? 1 : cfg.seeds.front());
    std::uint64_t count = seed_count >= 0
                              ? static_cast<std::uint64_t>(seed_count)
                              : cfg.seeds.size();
    cfg.seeds.clear();
    for (std::uint64_t i = 0; i < count; ++i) cfg.seeds.push_back(start + i);
  }
  if (!learners.empty()) {
    cfg.learners.clear();
    std::stringstream ss(learners);
    std::string id;
    while (std::getline(ss, id, ',')) cfg.learners.push_back(id);
  }
  cfg.validate();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output: " + path);
  return out;
}

int cmd_gen(const std::string& config_path, const std::string& out_path,
            long long seed) {
  ExperimentConfig cfg = load_config(config_path);
  std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed)
                              : cfg.seeds.front();
  RmabInstance inst = instance_for_seed(cfg, s);
  auto out = open_out(out_path.empty() ? "instance.json" : out_path);
  out << instance_to_json(inst).dump() << '\n';
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_path,
            int workers, long long seed_start, long long seed_count,
            const std::string& learners) {
  ExperimentConfig cfg = load_config(config_path);
  apply_overrides(cfg, out_path, seed_start, seed_count, learners);
  auto records = run_experiment(cfg, workers);
  auto out = open_out(cfg.output);
  write_runs_csv(records, out);
  std::cerr << "wrote " << records.size() << " rows to " << cfg.output << "\n";
  return 0;
}

int cmd_aggregate(const std::string& runs_path, const std::string& out_path,
                  const std::string& center) {
  std::ifstream in(runs_path);
  if (!in) throw std::runtime_error("cannot open runs csv: " + runs_path);
  auto rows = aggregate(read_runs_csv(in), center);
  auto out = open_out(out_path.empty() ? "aggregate.csv" : out_path);
  write_aggregate_csv(rows, out);
  return 0;
}

int cmd_plotdata(const std::string& agg_path, const std::string& out_path) {
  std::ifstream in(agg_path);
  if (!in) throw std::runtime_error("cannot open aggregate csv: " + agg_path);
  auto rows = read_aggregate_csv(in);
  auto out = open_out(out_path.empty() ? "plot.csv" : out_path);
  emit_plot_data(rows, out);
  return 0;
}

// Fast self-contained subset of the invariant/oracle suites.
int cmd_check() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::cout << (ok ? "ok" : "FAIL") << ": " << name << "\n";
    if (!ok) ++failures;
  };

  {
    Rng rng(7);
    WhittleConfig cfg;
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      ArmSnapshot arm;
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a) arm.p[s][a] = rng.uniform();
      for (int s = 0; s < 2; ++s) {
        double bs = whittle_index(arm, s, cfg);
        double grid = whittle_index_grid_oracle(arm, s, cfg.gamma, 1e-4);
        if (std::abs(bs - grid) > 2e-4 + cfg.bs_tol) ok = false;
      }
    }
    report("whittle index agrees with grid oracle (50 random arms)", ok);
  }
  {
    Rng rng(8);
    WhittleConfig cfg;
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
      ArmSnapshot arm;
      for (int s = 0; s < 2; ++s) {
        double p = rng.uniform();
        arm.p[s][0] = arm.p[s][1] = p;
      }
      for (int s = 0; s < 2; ++s)
        if (std::abs(whittle_index(arm, s, cfg)) > cfg.bs_tol) ok = false;
    }
    report("identical-action arms have zero index", ok);
  }
  {
    Eigen::MatrixXd basis = bspline_basis(50, 4);
    bool ok = true;
    for (int t = 0; t < 50; ++t) {
      if (std::abs(basis.row(t).sum() - 1.0) > 1e-12) ok = false;
      if (basis.row(t).minCoeff() < 0.0) ok = false;
    }
    report("spline basis rows form a partition of unity", ok);
  }
  {
    Rng rng = Rng::substream(3, "instance");
    RmabInstance inst =
        gen_instance(GenSetting::well_specified, 12, 6, 3,
                     CovariateSpec::for_k(4), SplineSpec{}, HyperParams{}, 3,
                     rng);
    auto j = instance_to_json(inst);
    RmabInstance back = instance_from_json(j);
    bool ok = validate_instance(inst).empty() &&
              back.transitions == inst.transitions;
    report("instance JSON round-trip is value-exact", ok);
  }
  {
    ExperimentConfig cfg;
    cfg.setting = GenSetting::stationary;
    cfg.n_arms = 8;
    cfg.horizon = 5;
    cfg.budget = 2;
    cfg.seeds = {1, 2};
    cfg.learners = {"random", "ts-whittle", "oracle-whittle-current"};
    cfg.mcmc.n_warmup = 20;
    std::ostringstream a, b;
    write_runs_csv(run_experiment(cfg, 1), a);
    write_runs_csv(run_experiment(cfg, 2), b);
    report("run_experiment is byte-identical across worker counts",
           a.str() == b.str());
  }
  std::cout << (failures == 0 ? "all checks passed\n" : "CHECKS FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual restless-bandit experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_path, learners, center = "random";
  std::string runs_path, agg_path;
  int workers = 1;
  long long seed_start = -1, seed_count = -1;

  auto* gen = app.add_subcommand("gen", "write an instance JSON document");
  gen->add_option("--config", config_path, "experiment config JSON")
      ->required();
  gen->add_option("--out", out_path, "output path (default instance.json)");
  gen->add_option("--seed-start", seed_start, "seed for the instance");

  auto* run = app.add_subcommand("run", "run configured episodes to a CSV");
  run->add_option("--config", config_path, "experiment config JSON")
      ->required();
  run->add_option("--out", out_path, "override config output path");
  run->add_option("--workers", workers, "worker threads (default 1)");
  run->add_option("--seed-start", seed_start, "override seed range start");
  run->add_option("--seed-count", seed_count, "override seed range length");
  run->add_option("--learners", learners, "comma list overriding config");

  auto* agg = app.add_subcommand("aggregate", "aggregate a runs CSV");
  agg->add_option("runs", runs_path, "runs CSV path")->required();
  agg->add_option("--out", out_path, "output path (default aggregate.csv)");
  agg->add_option("--center", center, "centering learner (default random)");

  auto* plot = app.add_subcommand("plotdata", "plot-ready CSV from aggregates");
  plot->add_option("aggregate", agg_path, "aggregate CSV path")->required();
  plot->add_option("--out", out_path, "output path (default plot.csv)");

  app.add_subcommand("check", "run fast invariant/oracle self-checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(config_path, out_path, seed_start);
    if (run->parsed())
      return cmd_run(config_path, out_path, workers, seed_start, seed_count,
                     learners);
    if (agg->parsed()) return cmd_aggregate(runs_path, out_path, center);
    if (plot->parsed()) return cmd_plotdata(agg_path, out_path);
    return cmd_check();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
