#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ligs/errors.hpp"
#include "ligs/harness.hpp"

using namespace ligs;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ligs_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small(Algorithm alg, std::uint64_t steps) {
  RunConfig c;
  c.experiment_id = ExperimentId::kForaging1;
  c.algorithm = alg;
  c.seed = 11;
  c.rollout_length = 16;
  c.num_actors = 2;
  c.hidden_sizes = {16};
  c.l_output_size = 8;
  c.total_env_steps = steps;
  return c;
}

RunOptions quiet(const fs::path& dir) {
  RunOptions o;
  o.out_dir = dir;
  o.checkpoints = false;
  o.heatmap = false;
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LIGS_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_csv(const fs::path& p, const std::vector<double>& returns) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p);
  out << kMetricsHeader << "\n";
  std::uint64_t step = 0;
  for (double r : returns) out << (step += 10) << "," << r << ",0,0,0,1\n";
}

}  // namespace

TEST(Harness, EmptyBudgetWritesHeaderOnly) {
  const fs::path dir = scratch("empty");
  const RunSummary s = run_experiment(small(Algorithm::kLigs, 0), quiet(dir));
  EXPECT_EQ(s.env_steps, 0u);
  EXPECT_EQ(s.metrics_file, dir / "foraging1" / "11.csv");
  EXPECT_EQ(slurp(s.metrics_file), std::string(kMetricsHeader) + "\n");
}

TEST(Harness, SameConfigSameBytes) {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  RunConfig cfg = small(Algorithm::kLigs, 3000);
  cfg.episode_limit = 20;
  const RunSummary x = run_experiment(cfg, quiet(a));
  const RunSummary y = run_experiment(cfg, quiet(b));
  EXPECT_GT(x.episodes, 0u);
  EXPECT_EQ(slurp(x.metrics_file), slurp(y.metrics_file));
  EXPECT_TRUE(validate_metrics(x.metrics_file).empty());
  cfg.seed = 12;
  const RunSummary z = run_experiment(cfg, quiet(b));
  EXPECT_NE(slurp(x.metrics_file), slurp(z.metrics_file));
}

TEST(Harness, VariantsBuildOnlyTheirModules) {
  const fs::path dir = scratch("purity");
  const RunSummary mappo = run_experiment(small(Algorithm::kMappo, 64), quiet(dir));
  EXPECT_FALSE(mappo.generator_built);
  EXPECT_FALSE(mappo.novelty_built);
  EXPECT_EQ(mappo.switch_activations, 0u);
  const RunSummary ippo = run_experiment(small(Algorithm::kIppo, 64), quiet(dir));
  EXPECT_FALSE(ippo.generator_built);
  EXPECT_FALSE(ippo.novelty_built);
  const RunSummary rnd = run_experiment(small(Algorithm::kMappoRnd, 64), quiet(dir));
  EXPECT_FALSE(rnd.generator_built);
  EXPECT_TRUE(rnd.novelty_built);
  const RunSummary ligs = run_experiment(small(Algorithm::kLigs, 64), quiet(dir));
  EXPECT_TRUE(ligs.generator_built);
  EXPECT_TRUE(ligs.novelty_built);
}

TEST(Harness, SwitchAblationRates) {
  const fs::path dir = scratch("ablation");
  const RunSummary on = run_experiment(small(Algorithm::kLigsAlwaysOn, 2048), quiet(dir));
  EXPECT_EQ(on.switch_activations, on.env_steps);
  const RunSummary coin = run_experiment(small(Algorithm::kLigsRandomSwitch, 20000), quiet(dir));
  const double rate = static_cast<double>(coin.switch_activations) / static_cast<double>(coin.env_steps);
  EXPECT_NEAR(rate, 0.5, 0.02);
}

TEST(Harness, ArtifactsWrittenNextToMetrics) {
  const fs::path dir = scratch("artifacts");
  RunOptions opt;
  opt.out_dir = dir;
  opt.trace = true;
  const RunSummary s = run_experiment(small(Algorithm::kLigs, 64), opt);
  const fs::path base = dir / "foraging1";
  EXPECT_TRUE(fs::exists(base / "11_heatmap.csv"));
  EXPECT_TRUE(fs::exists(base / "11_trace.jsonl"));
  EXPECT_TRUE(fs::is_directory(base / "11_ckpt"));
  const Heatmap map = read_heatmap(base / "11_heatmap.csv");
  EXPECT_EQ(map.agents, 2);
  // Every active step marks each agent's cell once.
  std::uint64_t total = 0;
  for (auto c : map.counts) total += c;
  EXPECT_EQ(total, s.switch_activations * 2);
}

TEST(Harness, CompareIdenticalRunsTies) {
  const fs::path dir = scratch("compare");
  for (const char* alg : {"mappo", "ligs"}) {
    for (int seed = 1; seed <= 3; ++seed) {
      write_csv(dir / alg / "foraging3" / (std::to_string(seed) + ".csv"), {0.0, 0.5, seed * 1.0});
    }
  }
  const CompareReport rep = compare_runs(dir, "foraging3", "mappo", "ligs", "ret_ext");
  EXPECT_EQ(rep.difference, 0.0);
  EXPECT_EQ(rep.sign, 0);
  EXPECT_EQ(rep.a.median, 2.0);

  fs::remove(dir / "ligs" / "foraging3" / "3.csv");
  try {
    compare_runs(dir, "foraging3", "mappo", "ligs", "ret_ext");
    FAIL() << "expected a missing-run error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("3.csv"), std::string::npos) << e.what();
  }
}

TEST(Harness, FinalWindowIsLastTenthOfRows) {
  std::vector<MetricsRow> rows(20);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].episode_return_extrinsic = static_cast<double>(i);
  EXPECT_DOUBLE_EQ(final_window_mean(rows, "ret_ext"), 18.5);
  rows.resize(3);
  EXPECT_DOUBLE_EQ(final_window_mean(rows, "ret_ext"), 2.0);
}

TEST(Harness, CliExitCodes) {
  const fs::path dir = scratch("cli");
  {
    std::ofstream(dir / "bad.cfg") << "experiment_id=foraging1\nlearning_rate=-1\n";
    std::ofstream(dir / "ok.cfg") << "experiment_id=foraging1\ntotal_env_steps=0\nseed=4\n";
  }
  EXPECT_EQ(run_cli("train --config " + (dir / "bad.cfg").string()), 1);
  EXPECT_EQ(run_cli("train --config " + (dir / "missing.cfg").string()), 1);
  EXPECT_EQ(run_cli("train --config " + (dir / "ok.cfg").string() + " --out " + dir.string()), 0);
  EXPECT_EQ(run_cli("validate-metrics " + (dir / "foraging1" / "4.csv").string()), 0);
  {
    std::ofstream(dir / "backwards.csv") << kMetricsHeader << "\n5,0,0,0,0,1\n3,0,0,0,0,1\n";
    std::ofstream(dir / "fixture.json")
        << R"({"P": [[[0.9]]], "R": [[0]], "gamma": 0.9, "F": [[0]], "switch_cost": 0})";
  }
  EXPECT_EQ(run_cli("validate-metrics " + (dir / "backwards.csv").string()), 1);
  EXPECT_EQ(run_cli("verify --quick --fixture " + (dir / "fixture.json").string()), 1);
  EXPECT_EQ(run_cli("compare --dir " + dir.string() + " --a x --b y --env corridor"), 1);
}
