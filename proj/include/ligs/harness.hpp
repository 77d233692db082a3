#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ligs/config.hpp"
#include "ligs/metrics.hpp"

namespace ligs {

// A module failure during training, tagged with the phase and global step.
class RunAbort : public std::runtime_error {
 public:
  RunAbort(std::string phase, std::uint64_t step, const std::string& what)
      : std::runtime_error("phase '" + phase + "' at step " + std::to_string(step) + ": " + what),
        phase_(std::move(phase)),
        step_(step) {}
  const std::string& phase() const { return phase_; }
  std::uint64_t step() const { return step_; }

 private:
  std::string phase_;
  std::uint64_t step_;
};

struct RunOptions {
  std::filesystem::path out_dir = "runs";
  bool trace = false;        // JSON-lines record per tick of actor 0
  bool checkpoints = true;
  bool heatmap = true;
};

struct RunSummary {
  std::filesystem::path metrics_file;
  std::uint64_t env_steps = 0;
  std::uint64_t episodes = 0;
  std::uint64_t switch_activations = 0;  // steps with q = 1
  std::uint64_t switch_ons = 0;          // 0 -> 1 transitions
  double final_window_return = 0.0;
  double final_window_success = 0.0;
  // Which optional modules this run instantiated.
  bool generator_built = false;
  bool novelty_built = false;
};

// Collect rollouts, then update novelty, Generator and agents, until the step
// budget is spent. Writes <out>/<experiment_id>/<seed>.csv plus heatmap,
// checkpoints and an optional trace next to it. Deterministic per config.
RunSummary run_experiment(const RunConfig& config, const RunOptions& options);

// Mean of a metric over the last 10% of rows (at least one row).
double final_window_mean(const std::vector<MetricsRow>& rows, const std::string& metric);

struct AlgorithmSummary {
  std::string algorithm;
  std::vector<std::string> seeds;
  std::vector<double> seed_values;
  double median = 0.0;
};

struct CompareReport {
  AlgorithmSummary a;
  AlgorithmSummary b;
  double difference = 0.0;  // median(b) - median(a)
  int sign = 0;
};

// Reads <dir>/<alg>/<env>/*.csv for both algorithms. Throws
// PreconditionError listing absent files when a seed is missing on one side,
// or when either side has fewer than three seeds.
CompareReport compare_runs(const std::filesystem::path& dir, const std::string& env,
                           const std::string& alg_a, const std::string& alg_b,
                           const std::string& metric);

// Per-agent activation grids written by run_experiment: rows
// "agent,y,count_x0,...".
struct Heatmap {
  int agents = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint64_t> counts;  // [agent][y][x]
  std::uint64_t& at(int agent, int x, int y) {
    return counts[static_cast<std::size_t>((agent * height + y) * width + x)];
  }
  std::uint64_t at(int agent, int x, int y) const {
    return counts[static_cast<std::size_t>((agent * height + y) * width + x)];
  }
};
void write_heatmap(const Heatmap& map, const std::filesystem::path& path);
Heatmap read_heatmap(const std::filesystem::path& path);

}  // namespace ligs
