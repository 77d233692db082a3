#include <CLI11.hpp>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "ligs/config.hpp"
#include "ligs/errors.hpp"
#include "ligs/harness.hpp"
#include "ligs/metrics.hpp"
#include "ligs/verify.hpp"

namespace fs = std::filesystem;
using namespace ligs;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kPropertyFailure = 2;
constexpr int kRuntimeAbort = 3;

int cmd_train(const std::string& config_path, const std::optional<std::uint64_t>& seed,
              const std::string& out, bool trace) {
  RunConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  RunOptions opt;
  opt.out_dir = out;
  opt.trace = trace;
  const RunSummary s = run_experiment(cfg, opt);
  std::cout << "metrics " << s.metrics_file.string() << "\n"
            << "env_steps " << s.env_steps << "  episodes " << s.episodes << "  switch_activations "
            << s.switch_activations << "\n"
            << "final-window return " << s.final_window_return << "  success " << s.final_window_success
            << "\n";
  return kOk;
}

int cmd_verify(double tol, const std::string& fixture, bool quick, std::uint64_t seed) {
  SuiteOptions opt;
  opt.slack = tol;
  opt.quick = quick;
  opt.seed = seed;
  if (!fixture.empty()) opt.fixture = fixture;
  const SuiteReport rep = run_theory_suite(opt);
  print_report(rep, std::cout);
  return rep.passed() ? kOk : kPropertyFailure;
}

int cmd_compare(const std::string& dir, const std::string& a, const std::string& b,
                const std::string& metric, const std::string& env) {
  std::vector<std::string> envs;
  if (!env.empty()) {
    envs.push_back(env);
  } else {
    for (auto id : {ExperimentId::kForaging1, ExperimentId::kForaging2, ExperimentId::kForaging3,
                    ExperimentId::kCorridor}) {
      const std::string name(to_string(id));
      if (fs::is_directory(fs::path(dir) / a / name) || fs::is_directory(fs::path(dir) / b / name)) {
        envs.push_back(name);
      }
    }
    if (envs.empty()) throw PreconditionError("no runs for " + a + " or " + b + " under " + dir);
  }
  for (const std::string& e : envs) {
    const CompareReport rep = compare_runs(dir, e, a, b, metric);
    std::cout << e << " " << metric << " (final 10% window, median over seeds)\n";
    for (const AlgorithmSummary* s : {&rep.a, &rep.b}) {
      std::cout << "  " << std::left << std::setw(20) << s->algorithm << " median " << s->median << "  seeds";
      for (std::size_t i = 0; i < s->seeds.size(); ++i) std::cout << " " << s->seeds[i] << ":" << s->seed_values[i];
      std::cout << "\n";
    }
    std::cout << "  " << b << " - " << a << " = " << rep.difference << " ("
              << (rep.sign > 0 ? b + " ahead" : rep.sign < 0 ? a + " ahead" : "tie") << ")\n";
  }
  return kOk;
}

int cmd_heatmap(const std::string& run_dir) {
  static const char* kShades = " .:-=+*#%@";
  int found = 0;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || name.size() < 12 || name.substr(name.size() - 12) != "_heatmap.csv") continue;
    ++found;
    const Heatmap map = read_heatmap(entry.path());
    std::cout << entry.path().string() << "\n";
    for (int a = 0; a < map.agents; ++a) {
      std::uint64_t peak = 0;
      std::uint64_t total = 0;
      for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
          peak = std::max(peak, map.at(a, x, y));
          total += map.at(a, x, y);
        }
      }
      std::cout << " agent " << a << " (" << total << " activations, peak " << peak << ")\n";
      for (int y = 0; y < map.height; ++y) {
        std::cout << "  |";
        for (int x = 0; x < map.width; ++x) {
          const std::uint64_t c = map.at(a, x, y);
          const int level = peak == 0 ? 0 : static_cast<int>((c * 9 + peak - 1) / peak);
          std::cout << kShades[level];
        }
        std::cout << "|\n";
      }
    }
  }
  if (found == 0) throw PreconditionError("no *_heatmap.csv files under " + run_dir);
  return kOk;
}

int cmd_validate(const std::vector<std::string>& files) {
  int bad = 0;
  for (const std::string& f : files) {
    const auto problems = validate_metrics(f);
    if (problems.empty()) {
      std::cout << f << ": ok\n";
      continue;
    }
    ++bad;
    for (const auto& p : problems) std::cout << f << ": " << p << "\n";
  }
  return bad == 0 ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learnable intrinsic-reward generation for cooperative multi-agent RL"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  bool trace = false;
  auto* train = app.add_subcommand("train", "Train one configured run");
  train->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", out, "Output directory");
  train->add_flag("--trace", trace, "Write a JSON-lines tick trace for actor 0");

  double tol = 1e-12;
  std::string fixture;
  bool quick = false;
  std::uint64_t verify_seed = SuiteOptions{}.seed;
  auto* verify = app.add_subcommand("verify", "Run the tabular property suite");
  verify->add_option("--tol", tol, "Contraction slack (1e-12 floor)");
  verify->add_option("--fixture", fixture, "Also validate and solve this game JSON");
  verify->add_flag("--quick", quick, "Fewer games and learning steps");
  verify->add_option("--seed", verify_seed, "Suite seed");

  std::string dir;
  std::string alg_a;
  std::string alg_b;
  std::string metric = "ret_ext";
  std::string env;
  auto* compare = app.add_subcommand("compare", "Median final-window metric of two algorithms");
  compare->add_option("--dir", dir, "Root holding <alg>/<env>/<seed>.csv")->required();
  compare->add_option("--a", alg_a, "Baseline algorithm")->required();
  compare->add_option("--b", alg_b, "Test algorithm")->required();
  compare->add_option("--metric", metric, "ret_ext, ret_int, switches or success");
  compare->add_option("--env", env, "Experiment id (default: every one present)");

  std::string run_dir;
  auto* heatmap = app.add_subcommand("heatmap", "Render switch-activation heatmaps");
  heatmap->add_option("--run", run_dir, "Run output directory")->required();

  std::vector<std::string> metric_files;
  auto* validate = app.add_subcommand("validate-metrics", "Check metrics CSV files");
  validate->add_option("files", metric_files, "Metrics files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*train) return cmd_train(config_path, seed, out, trace);
    if (*verify) return cmd_verify(tol, fixture, quick, verify_seed);
    if (*compare) return cmd_compare(dir, alg_a, alg_b, metric, env);
    if (*heatmap) return cmd_heatmap(run_dir);
    if (*validate) return cmd_validate(metric_files);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidation;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const RunAbort& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kRuntimeAbort;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kRuntimeAbort;
  }
  return kOk;
}
