#include "ligs/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "ligs/errors.hpp"

namespace ligs {
namespace {

template <typename Enum, std::size_t N>
using TokenTable = std::array<std::pair<std::string_view, Enum>, N>;

constexpr TokenTable<ExperimentId, 4> kExperimentTokens{{
    {"foraging1", ExperimentId::kForaging1},
    {"foraging2", ExperimentId::kForaging2},
    {"foraging3", ExperimentId::kForaging3},
    {"corridor", ExperimentId::kCorridor},
}};

constexpr TokenTable<Algorithm, 6> kAlgorithmTokens{{
    {"ligs", Algorithm::kLigs},
    {"mappo", Algorithm::kMappo},
    {"ippo", Algorithm::kIppo},
    {"mappo_rnd", Algorithm::kMappoRnd},
    {"ligs_random_switch", Algorithm::kLigsRandomSwitch},
    {"ligs_always_on", Algorithm::kLigsAlwaysOn},
}};

constexpr TokenTable<NoveltyKind, 2> kNoveltyTokens{{
    {"rnd", NoveltyKind::kRnd},
    {"count", NoveltyKind::kCount},
}};

constexpr TokenTable<BaseLearner, 2> kLearnerTokens{{
    {"mappo", BaseLearner::kMappo},
    {"ippo", BaseLearner::kIppo},
}};

constexpr TokenTable<SwitchOff, 2> kSwitchOffTokens{{
    {"option", SwitchOff::kOption},
    {"policy", SwitchOff::kPolicy},
}};

template <typename Enum, std::size_t N>
std::string_view token_of(const TokenTable<Enum, N>& table, Enum value) {
  for (const auto& [token, v] : table) {
    if (v == value) return token;
  }
  return "?";
}

template <typename Enum, std::size_t N>
Enum enum_of(const TokenTable<Enum, N>& table, std::string_view key, std::string_view token) {
  for (const auto& [t, v] : table) {
    if (t == token) return v;
  }
  std::string allowed;
  for (const auto& [t, v] : table) {
    if (!allowed.empty()) allowed += "|";
    allowed += t;
  }
  throw ConfigError(std::string(key),
                    "unknown token '" + std::string(token) + "' (expected " + allowed + ")");
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key), "not a real number: '" + std::string(value) + "'");
  }
  return out;
}

std::int64_t parse_integer(std::string_view key, std::string_view value) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key), "not an integer: '" + std::string(value) + "'");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key), "not an unsigned integer: '" + std::string(value) + "'");
  }
  return out;
}

int parse_int(std::string_view key, std::string_view value) {
  const std::int64_t v = parse_integer(key, value);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(std::string(key), "integer out of range");
  return static_cast<int>(v);
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(std::string(key), "not a boolean: '" + std::string(value) + "'");
}

std::vector<int> parse_sizes(std::string_view key, std::string_view value) {
  std::vector<int> sizes;
  while (!value.empty()) {
    const auto pos = value.find('x');
    sizes.push_back(parse_int(key, trim(value.substr(0, pos))));
    if (pos == std::string_view::npos) break;
    value.remove_prefix(pos + 1);
  }
  return sizes;
}

std::string join_sizes(const std::vector<int>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(sizes[i]);
  }
  return out;
}

void require(bool ok, std::string_view key, const std::string& message) {
  if (!ok) throw ConfigError(std::string(key), message);
}

void set_field(RunConfig& c, std::string_view key, std::string_view v) {
  if (key == "experiment_id") c.experiment_id = enum_of(kExperimentTokens, key, v);
  else if (key == "seed") c.seed = parse_unsigned(key, v);
  else if (key == "gamma") c.gamma = parse_real(key, v);
  else if (key == "gae_lambda") c.gae_lambda = parse_real(key, v);
  else if (key == "learning_rate") c.learning_rate = parse_real(key, v);
  else if (key == "rollout_length") c.rollout_length = parse_int(key, v);
  else if (key == "num_actors") c.num_actors = parse_int(key, v);
  else if (key == "num_minibatches") c.num_minibatches = parse_int(key, v);
  else if (key == "num_epochs") c.num_epochs = parse_int(key, v);
  else if (key == "grad_clip_norm") c.grad_clip_norm = parse_real(key, v);
  else if (key == "switch_cost") c.switch_cost = parse_real(key, v);
  else if (key == "intrinsic_coef") c.intrinsic_coef = parse_real(key, v);
  else if (key == "extrinsic_coef") c.extrinsic_coef = parse_real(key, v);
  else if (key == "l_output_size") c.l_output_size = parse_int(key, v);
  else if (key == "generator_action_count") c.generator_action_count = parse_int(key, v);
  else if (key == "option_terminate_prob") c.option_terminate_prob = parse_real(key, v);
  else if (key == "novelty_kind") c.novelty_kind = enum_of(kNoveltyTokens, key, v);
  else if (key == "algorithm") c.algorithm = enum_of(kAlgorithmTokens, key, v);
  else if (key == "total_env_steps") c.total_env_steps = parse_unsigned(key, v);
  else if (key == "base_learner") c.base_learner = enum_of(kLearnerTokens, key, v);
  else if (key == "share_actor") c.share_actor = parse_bool(key, v);
  else if (key == "hidden_sizes") c.hidden_sizes = parse_sizes(key, v);
  else if (key == "clip_eps") c.clip_eps = parse_real(key, v);
  else if (key == "value_coef") c.value_coef = parse_real(key, v);
  else if (key == "entropy_coef") c.entropy_coef = parse_real(key, v);
  else if (key == "generator_gamma") c.generator_gamma = parse_real(key, v);
  else if (key == "switch_off") c.switch_off = enum_of(kSwitchOffTokens, key, v);
  else if (key == "count_uses_action") c.count_uses_action = parse_bool(key, v);
  else if (key == "episode_limit") c.episode_limit = parse_int(key, v);
  else throw ConfigError(std::string(key), "unknown key");
}

}  // namespace

std::string_view to_string(ExperimentId id) { return token_of(kExperimentTokens, id); }
std::string_view to_string(Algorithm alg) { return token_of(kAlgorithmTokens, alg); }
std::string_view to_string(NoveltyKind kind) { return token_of(kNoveltyTokens, kind); }
std::string_view to_string(BaseLearner learner) { return token_of(kLearnerTokens, learner); }
std::string_view to_string(SwitchOff mode) { return token_of(kSwitchOffTokens, mode); }

ExperimentId parse_experiment_id(std::string_view token) {
  return enum_of(kExperimentTokens, "experiment_id", token);
}
Algorithm parse_algorithm(std::string_view token) {
  return enum_of(kAlgorithmTokens, "algorithm", token);
}

bool uses_generator(Algorithm alg) {
  return alg == Algorithm::kLigs || alg == Algorithm::kLigsRandomSwitch ||
         alg == Algorithm::kLigsAlwaysOn;
}

bool uses_novelty(Algorithm alg) { return uses_generator(alg) || alg == Algorithm::kMappoRnd; }

std::uint64_t default_total_env_steps(ExperimentId id) {
  return id == ExperimentId::kCorridor ? 500000 : 300000;
}

std::string format_real(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string out(buf.data(), ec == std::errc() ? ptr : buf.data());
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

void validate_config(const RunConfig& c) {
  require(c.gamma > 0.0 && c.gamma < 1.0, "gamma", "must lie in (0,1)");
  require(c.gae_lambda >= 0.0 && c.gae_lambda <= 1.0, "gae_lambda", "must lie in [0,1]");
  require(c.learning_rate > 0.0, "learning_rate", "must be > 0");
  require(c.rollout_length >= 1, "rollout_length", "must be >= 1");
  require(c.num_actors >= 1, "num_actors", "must be >= 1");
  require(c.num_minibatches >= 1, "num_minibatches", "must be >= 1");
  require(c.num_epochs >= 1, "num_epochs", "must be >= 1");
  require(c.grad_clip_norm > 0.0, "grad_clip_norm", "must be > 0");
  require(c.switch_cost >= 0.0, "switch_cost", "must be >= 0");
  require(c.intrinsic_coef >= 0.0, "intrinsic_coef", "must be >= 0");
  require(c.extrinsic_coef >= 0.0, "extrinsic_coef", "must be >= 0");
  require(c.l_output_size >= 1, "l_output_size", "must be >= 1");
  require(c.generator_action_count >= 1, "generator_action_count", "must be >= 1");
  require(c.option_terminate_prob >= 0.0 && c.option_terminate_prob <= 1.0,
          "option_terminate_prob", "must lie in [0,1]");
  require(!c.hidden_sizes.empty(), "hidden_sizes", "needs at least one layer");
  for (int h : c.hidden_sizes) require(h >= 1, "hidden_sizes", "widths must be >= 1");
  require(c.clip_eps > 0.0 && c.clip_eps < 1.0, "clip_eps", "must lie in (0,1)");
  require(c.value_coef >= 0.0, "value_coef", "must be >= 0");
  require(c.entropy_coef >= 0.0, "entropy_coef", "must be >= 0");
  require(c.generator_gamma > 0.0 && c.generator_gamma < 1.0, "generator_gamma",
          "must lie in (0,1)");
  require(c.episode_limit >= 0, "episode_limit", "must be >= 0");
}

RunConfig parse_config(std::string_view text) {
  RunConfig config;
  std::map<std::string, std::string, std::less<>> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty()) {
      const auto comma = line.find(',');
      const std::string_view entry = trim(line.substr(0, comma));
      line = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
      if (entry.empty()) continue;
      const auto eq = entry.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(std::string(entry),
                          "line " + std::to_string(line_no) + ": expected key=value");
      }
      const std::string key(trim(entry.substr(0, eq)));
      const std::string value(trim(entry.substr(eq + 1)));
      if (!entries.emplace(key, value).second) throw ConfigError(key, "duplicate key");
    }
  }
  if (!entries.contains("experiment_id")) throw ConfigError("experiment_id", "missing required key");
  for (const auto& [key, value] : entries) set_field(config, key, value);
  if (!entries.contains("total_env_steps")) {
    config.total_env_steps = default_total_env_steps(config.experiment_id);
  }
  validate_config(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "experiment_id=" << to_string(c.experiment_id) << '\n'
      << "seed=" << c.seed << '\n'
      << "gamma=" << format_real(c.gamma) << '\n'
      << "gae_lambda=" << format_real(c.gae_lambda) << '\n'
      << "learning_rate=" << format_real(c.learning_rate) << '\n'
      << "rollout_length=" << c.rollout_length << '\n'
      << "num_actors=" << c.num_actors << '\n'
      << "num_minibatches=" << c.num_minibatches << '\n'
      << "num_epochs=" << c.num_epochs << '\n'
      << "grad_clip_norm=" << format_real(c.grad_clip_norm) << '\n'
      << "switch_cost=" << format_real(c.switch_cost) << '\n'
      << "intrinsic_coef=" << format_real(c.intrinsic_coef) << '\n'
      << "extrinsic_coef=" << format_real(c.extrinsic_coef) << '\n'
      << "l_output_size=" << c.l_output_size << '\n'
      << "generator_action_count=" << c.generator_action_count << '\n'
      << "option_terminate_prob=" << format_real(c.option_terminate_prob) << '\n'
      << "novelty_kind=" << to_string(c.novelty_kind) << '\n'
      << "algorithm=" << to_string(c.algorithm) << '\n'
      << "total_env_steps=" << c.total_env_steps << '\n'
      << "base_learner=" << to_string(c.base_learner) << '\n'
      << "share_actor=" << (c.share_actor ? "true" : "false") << '\n'
      << "hidden_sizes=" << join_sizes(c.hidden_sizes) << '\n'
      << "clip_eps=" << format_real(c.clip_eps) << '\n'
      << "value_coef=" << format_real(c.value_coef) << '\n'
      << "entropy_coef=" << format_real(c.entropy_coef) << '\n'
      << "generator_gamma=" << format_real(c.generator_gamma) << '\n'
      << "switch_off=" << to_string(c.switch_off) << '\n'
      << "count_uses_action=" << (c.count_uses_action ? "true" : "false") << '\n'
      << "episode_limit=" << c.episode_limit << '\n';
  return out.str();
}

}  // namespace ligs
