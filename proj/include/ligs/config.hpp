#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ligs {

enum class ExperimentId { kForaging1, kForaging2, kForaging3, kCorridor };
enum class Algorithm { kLigs, kMappo, kIppo, kMappoRnd, kLigsRandomSwitch, kLigsAlwaysOn };
enum class NoveltyKind { kRnd, kCount };
enum class BaseLearner { kMappo, kIppo };
// How an active intrinsic-reward stream ends: a coin flip with
// option_terminate_prob ("option"), or the switch policy consulted again at the
// next state ("policy").
enum class SwitchOff { kOption, kPolicy };

std::string_view to_string(ExperimentId id);
std::string_view to_string(Algorithm alg);
std::string_view to_string(NoveltyKind kind);
std::string_view to_string(BaseLearner learner);
std::string_view to_string(SwitchOff mode);

ExperimentId parse_experiment_id(std::string_view token);
Algorithm parse_algorithm(std::string_view token);

// True for the three Generator variants.
bool uses_generator(Algorithm alg);
// True when the run owns a novelty module (Generator variants and mappo_rnd).
bool uses_novelty(Algorithm alg);

struct RunConfig {
  ExperimentId experiment_id = ExperimentId::kForaging1;
  std::uint64_t seed = 0;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double learning_rate = 1e-4;
  int rollout_length = 128;
  int num_actors = 16;
  int num_minibatches = 4;
  int num_epochs = 4;
  double grad_clip_norm = 1.0;
  double switch_cost = 0.1;
  double intrinsic_coef = 1.0;
  double extrinsic_coef = 1.0;
  int l_output_size = 32;
  int generator_action_count = 1;
  double option_terminate_prob = 0.9;
  NoveltyKind novelty_kind = NoveltyKind::kRnd;
  Algorithm algorithm = Algorithm::kLigs;
  std::uint64_t total_env_steps = 300000;

  // Learner and Generator knobs.
  BaseLearner base_learner = BaseLearner::kMappo;
  bool share_actor = true;
  std::vector<int> hidden_sizes = {64, 64};
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double generator_gamma = 0.99;
  SwitchOff switch_off = SwitchOff::kOption;
  bool count_uses_action = false;
  // 0 keeps the environment's own limit.
  int episode_limit = 0;

  bool operator==(const RunConfig&) const = default;
};

// Default step budget for an experiment when the config leaves it unset.
std::uint64_t default_total_env_steps(ExperimentId id);

// Parses flat key=value text. Entries are separated by newlines or commas and
// `#` starts a comment. experiment_id is required; every other key falls back
// to the defaults above. Throws ConfigError naming the key on any problem.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical form: every key, one per line, fixed order, shortest round-trip
// number formatting. parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

// Throws ConfigError if any field is out of range.
void validate_config(const RunConfig& config);

// Shortest decimal that round-trips, always containing '.' or an exponent
// ("0.0", "1.5", "1e-08").
std::string format_real(double value);

}  // namespace ligs
