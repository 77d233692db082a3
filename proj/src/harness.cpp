#include "ligs/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "ligs/envs.hpp"
#include "ligs/errors.hpp"
#include "ligs/generator.hpp"
#include "ligs/learners.hpp"
#include "ligs/novelty.hpp"

namespace ligs {

namespace fs = std::filesystem;

namespace {

struct ActorSlot {
  GridEnv env;
  Rng env_rng;
  Rng opponent_rng;
  Rng agent_rng;
  Rng generator_rng;
  SwitchState switch_state;
  // Running episode totals.
  double ret_ext = 0.0;
  double ret_int = 0.0;
  std::uint64_t switches = 0;
};

class Trainer {
 public:
  Trainer(const RunConfig& config, const RunOptions& options);
  RunSummary run();

 private:
  void collect(RolloutBuffer& buffer);
  void finish_episode(ActorSlot& slot);
  void update(RolloutBuffer& buffer);
  void write_outputs();
  std::vector<int> novelty_key(const ActorSlot& slot, std::span<const int> joint) const;

  RunConfig cfg_;
  RunOptions opt_;
  EnvParams env_params_;
  int state_dim_ = 0;
  int num_agents_ = 0;
  Rng root_;
  Rng minibatch_rng_;
  std::vector<ActorSlot> slots_;
  std::unique_ptr<MultiAgentLearner> learner_;

  std::optional<GeneratorPolicies> generator_;
  std::optional<PotentialNet> potential_;
  SwitchSource source_ = SwitchSource::kPolicy;

  std::optional<RndPair> rnd_;
  std::optional<VisitCounter> counter_;
  RunningStats novelty_stats_;

  fs::path run_dir_;
  std::optional<MetricsWriter> metrics_;
  std::ofstream trace_;
  Heatmap heatmap_;
  RunSummary summary_;
  std::vector<MetricsRow> rows_;
  std::string phase_ = "setup";
};

Trainer::Trainer(const RunConfig& config, const RunOptions& options)
    : cfg_(config), opt_(options), env_params_(env_params_for(config.experiment_id)),
      root_(config.seed), minibatch_rng_(root_.fork(streams::kMinibatch)) {
  validate_config(cfg_);
  if (cfg_.episode_limit > 0) env_params_.episode_limit = cfg_.episode_limit;
  Rng init = root_.fork(streams::kInit);

  for (int a = 0; a < cfg_.num_actors; ++a) {
    const Rng actor_root = root_.fork(streams::kActorBase + static_cast<std::uint64_t>(a));
    slots_.push_back({GridEnv(env_params_), actor_root.fork(streams::kEnv),
                      actor_root.fork(streams::kOpponent), actor_root.fork(streams::kAgents),
                      actor_root.fork(streams::kGenerator), SwitchState{}});
  }
  num_agents_ = slots_.front().env.num_agents();
  state_dim_ = slots_.front().env.state_dim();

  const bool ippo = cfg_.algorithm == Algorithm::kIppo ||
                    (uses_generator(cfg_.algorithm) && cfg_.base_learner == BaseLearner::kIppo);
  learner_ = std::make_unique<MultiAgentLearner>(state_dim_, num_agents_, kNumActions,
                                                 ippo ? LearnerMode::kIppo : LearnerMode::kMappo,
                                                 cfg_.share_actor, cfg_.hidden_sizes, init);
  if (uses_generator(cfg_.algorithm)) {
    generator_ = make_generator(state_dim_, cfg_.generator_action_count, cfg_.hidden_sizes, init);
    potential_.emplace(state_dim_, cfg_.generator_action_count, cfg_.hidden_sizes, init);
    source_ = switch_source_for(cfg_.algorithm);
    summary_.generator_built = true;
  }
  if (uses_novelty(cfg_.algorithm)) {
    if (cfg_.novelty_kind == NoveltyKind::kRnd) {
      rnd_ = make_rnd(state_dim_ + num_agents_ * kNumActions, cfg_.l_output_size, cfg_.hidden_sizes, init);
    } else {
      counter_.emplace();
    }
    summary_.novelty_built = true;
  }

  run_dir_ = opt_.out_dir / std::string(to_string(cfg_.experiment_id));
  summary_.metrics_file = metrics_path(opt_.out_dir, std::string(to_string(cfg_.experiment_id)), cfg_.seed);
  metrics_.emplace(summary_.metrics_file);
  if (opt_.trace) {
    trace_.open(run_dir_ / (std::to_string(cfg_.seed) + "_trace.jsonl"));
    if (!trace_) throw std::runtime_error("cannot open trace file in " + run_dir_.string());
  }
  heatmap_.agents = num_agents_;
  heatmap_.width = env_params_.width;
  heatmap_.height = env_params_.height;
  heatmap_.counts.assign(static_cast<std::size_t>(num_agents_ * env_params_.width * env_params_.height), 0);

  for (ActorSlot& slot : slots_) slot.env.reset(slot.env_rng);
}

std::vector<int> Trainer::novelty_key(const ActorSlot& slot, std::span<const int> joint) const {
  std::vector<int> key = slot.env.config_key();
  if (cfg_.count_uses_action) key.insert(key.end(), joint.begin(), joint.end());
  return key;
}

void Trainer::finish_episode(ActorSlot& slot) {
  MetricsRow row;
  row.step = summary_.env_steps;
  row.episode_return_extrinsic = slot.ret_ext;
  row.episode_return_intrinsic = slot.ret_int;
  row.switch_activations = slot.switches;
  row.win_or_success = slot.env.success() ? 1 : 0;
  row.wall_seed = cfg_.seed;
  metrics_->write(row);
  rows_.push_back(row);
  ++summary_.episodes;
  slot.ret_ext = 0.0;
  slot.ret_int = 0.0;
  slot.switches = 0;
  slot.env.reset(slot.env_rng);
}

void Trainer::collect(RolloutBuffer& buffer) {
  phase_ = "collect";
  const int A = cfg_.num_actors;
  for (int t = 0; t < cfg_.rollout_length; ++t) {
    for (int a = 0; a < A; ++a) {
      ActorSlot& slot = slots_[static_cast<std::size_t>(a)];
      Transition& row = buffer.at(t, a);
      row.state = slot.env.encode_state();
      const std::vector<Cell> positions = slot.env.agent_positions();
      const int tick = slot.env.tick();

      const MultiAgentLearner::JointAct ja = learner_->act(row.state, slot.agent_rng);
      row.actions = ja.actions;
      row.log_probs = ja.log_probs;
      row.values = ja.values;

      if (counter_) row.novelty = novelty_count(*counter_, novelty_key(slot, ja.actions));
      if (rnd_) {
        row.novelty = normalize_novelty(novelty_stats_, novelty_rnd(*rnd_, rnd_input(row.state, ja.actions, kNumActions)));
      }

      const StepResult step = slot.env.step(ja.actions, slot.opponent_rng);
      ++summary_.env_steps;
      row.next_state = step.next_state;
      row.rewards = step.per_agent_reward;
      row.team_reward = step.team_reward;
      row.done = step.done;

      if (generator_) {
        const GeneratorDecision d = decide(*generator_, slot.switch_state, row.state, row.next_state,
                                           step.done, tick, *potential_, slot.generator_rng, cfg_, source_);
        row.q = d.q;
        row.theta = d.theta;
        row.intrinsic_f = d.intrinsic_f;
        row.switch_cost = d.switch_cost_charge;
        row.switch_consulted = d.consulted;
        row.switch_log_prob = d.switch_log_prob;
        row.theta_log_prob = d.theta_log_prob;
        row.potential = d.potential;
        row.next_potential = d.next_potential;
        row.switch_value = predict_row(generator_->switch_critic, row.state)[0];
        row.reward_value = predict_row(generator_->reward_critic, row.state)[0];
        if (d.switched_on) ++summary_.switch_ons;
        if (d.q == 1) {
          ++summary_.switch_activations;
          ++slot.switches;
          for (int i = 0; i < num_agents_; ++i) {
            const Cell c = positions[static_cast<std::size_t>(i)];
            ++heatmap_.at(i, c.x, c.y);
          }
        }
        slot.ret_int += d.intrinsic_f * d.q;
      } else if (rnd_ || counter_) {
        slot.ret_int += cfg_.intrinsic_coef * row.novelty;
      }
      slot.ret_ext += step.team_reward;

      if (opt_.trace && a == 0) {
        nlohmann::json rec;
        rec["tick"] = tick;
        nlohmann::json pos = nlohmann::json::array();
        for (const Cell& c : positions) pos.push_back({c.x, c.y});
        rec["positions"] = pos;
        rec["actions"] = ja.actions;
        rec["rewards"] = step.per_agent_reward;
        rec["q"] = row.q;
        trace_ << rec.dump() << '\n';
      }
      if (step.done) finish_episode(slot);
    }
  }
  for (int a = 0; a < A; ++a) {
    const Vector s = slots_[static_cast<std::size_t>(a)].env.encode_state();
    buffer.bootstrap_values[static_cast<std::size_t>(a)] = learner_->values(s);
    if (generator_) {
      buffer.switch_bootstrap[static_cast<std::size_t>(a)] = predict_row(generator_->switch_critic, s)[0];
      buffer.reward_bootstrap[static_cast<std::size_t>(a)] = predict_row(generator_->reward_critic, s)[0];
    }
  }
}

void Trainer::update(RolloutBuffer& buffer) {
  if (rnd_) {
    phase_ = "novelty update";
    Matrix batch(static_cast<Eigen::Index>(buffer.rows.size()), state_dim_ + num_agents_ * kNumActions);
    for (std::size_t i = 0; i < buffer.rows.size(); ++i) {
      batch.row(static_cast<Eigen::Index>(i)) =
          rnd_input(buffer.rows[i].state, buffer.rows[i].actions, kNumActions).transpose();
    }
    rnd_update(*rnd_, batch, cfg_.learning_rate, cfg_.grad_clip_norm);
  }
  if (generator_) {
    phase_ = "generator update";
    for (Transition& row : buffer.rows) row.generator_reward = generator_reward(row, cfg_);
    update_generator(*generator_, buffer, cfg_, minibatch_rng_);
  }
  phase_ = "agent update";
  std::vector<std::vector<double>> rewards(buffer.rows.size());
  for (std::size_t i = 0; i < buffer.rows.size(); ++i) {
    const Transition& row = buffer.rows[i];
    for (int k = 0; k < num_agents_; ++k) {
      double r = assemble_shaped_reward(row, k, cfg_);
      if (cfg_.algorithm == Algorithm::kMappoRnd) r += cfg_.intrinsic_coef * row.novelty;
      rewards[i].push_back(r);
    }
  }
  learner_->update(buffer, rewards, cfg_, minibatch_rng_);
}

void Trainer::write_outputs() {
  phase_ = "write outputs";
  const std::string stem = std::to_string(cfg_.seed);
  if (opt_.heatmap && generator_) write_heatmap(heatmap_, run_dir_ / (stem + "_heatmap.csv"));
  if (!opt_.checkpoints) return;
  const fs::path dir = run_dir_ / (stem + "_ckpt");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < learner_->actors().size(); ++i) {
    save_checkpoint(learner_->actors()[i], dir / ("actor_" + std::to_string(i) + ".bin"));
  }
  for (std::size_t i = 0; i < learner_->critics().size(); ++i) {
    save_checkpoint(learner_->critics()[i], dir / ("critic_" + std::to_string(i) + ".bin"));
  }
  if (generator_) {
    save_checkpoint(generator_->switch_actor, dir / "switch_actor.bin");
    save_checkpoint(generator_->switch_critic, dir / "switch_critic.bin");
    save_checkpoint(generator_->reward_actor, dir / "reward_actor.bin");
    save_checkpoint(generator_->reward_critic, dir / "reward_critic.bin");
  }
  if (rnd_) save_checkpoint(rnd_->predictor, dir / "novelty_predictor.bin");
}

RunSummary Trainer::run() {
  const std::uint64_t per_iter =
      static_cast<std::uint64_t>(cfg_.rollout_length) * static_cast<std::uint64_t>(cfg_.num_actors);
  const std::uint64_t iterations = (cfg_.total_env_steps + per_iter - 1) / per_iter;
  try {
    for (std::uint64_t it = 0; it < iterations; ++it) {
      RolloutBuffer buffer(cfg_.rollout_length, cfg_.num_actors);
      collect(buffer);
      update(buffer);
    }
    write_outputs();
  } catch (const RunAbort&) {
    throw;
  } catch (const std::exception& e) {
    throw RunAbort(phase_, summary_.env_steps, e.what());
  }
  summary_.final_window_return = rows_.empty() ? 0.0 : final_window_mean(rows_, "ret_ext");
  summary_.final_window_success = rows_.empty() ? 0.0 : final_window_mean(rows_, "success");
  return summary_;
}

double metric_of(const MetricsRow& row, const std::string& metric) {
  if (metric == "ret_ext") return row.episode_return_extrinsic;
  if (metric == "ret_int") return row.episode_return_intrinsic;
  if (metric == "switches") return static_cast<double>(row.switch_activations);
  if (metric == "success") return row.win_or_success;
  throw PreconditionError("unknown metric '" + metric + "' (ret_ext, ret_int, switches, success)");
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::map<std::string, fs::path> seed_files(const fs::path& dir) {
  std::map<std::string, fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv" &&
        entry.path().stem().string().find('_') == std::string::npos) {
      out[entry.path().stem().string()] = entry.path();
    }
  }
  return out;
}

}  // namespace

RunSummary run_experiment(const RunConfig& config, const RunOptions& options) {
  Trainer trainer(config, options);
  return trainer.run();
}

double final_window_mean(const std::vector<MetricsRow>& rows, const std::string& metric) {
  if (rows.empty()) throw PreconditionError("final window of an empty metrics file");
  const std::size_t window = std::max<std::size_t>(1, (rows.size() + 9) / 10);
  double total = 0.0;
  for (std::size_t i = rows.size() - window; i < rows.size(); ++i) total += metric_of(rows[i], metric);
  return total / static_cast<double>(window);
}

CompareReport compare_runs(const fs::path& dir, const std::string& env, const std::string& alg_a,
                           const std::string& alg_b, const std::string& metric) {
  parse_algorithm(alg_a);
  parse_algorithm(alg_b);
  parse_experiment_id(env);
  const fs::path dir_a = dir / alg_a / env;
  const fs::path dir_b = dir / alg_b / env;
  const auto files_a = seed_files(dir_a);
  const auto files_b = seed_files(dir_b);

  std::set<std::string> seeds;
  for (const auto& [s, p] : files_a) seeds.insert(s);
  for (const auto& [s, p] : files_b) seeds.insert(s);
  std::vector<std::string> missing;
  for (const std::string& s : seeds) {
    if (!files_a.count(s)) missing.push_back((dir_a / (s + ".csv")).string());
    if (!files_b.count(s)) missing.push_back((dir_b / (s + ".csv")).string());
  }
  if (!missing.empty()) {
    std::string msg = "missing runs:";
    for (const auto& m : missing) msg += " " + m;
    throw PreconditionError(msg);
  }
  if (seeds.size() < 3) {
    throw PreconditionError("need at least 3 seeds per algorithm, found " + std::to_string(seeds.size()) +
                            " under " + dir_a.string() + " and " + dir_b.string());
  }

  CompareReport rep;
  const auto summarize = [&](const std::string& alg, const std::map<std::string, fs::path>& files) {
    AlgorithmSummary s;
    s.algorithm = alg;
    for (const auto& [seed, path] : files) {
      const auto rows = read_metrics(path);
      if (rows.empty()) throw PreconditionError("run has no episodes: " + path.string());
      s.seeds.push_back(seed);
      s.seed_values.push_back(final_window_mean(rows, metric));
    }
    s.median = median(s.seed_values);
    return s;
  };
  rep.a = summarize(alg_a, files_a);
  rep.b = summarize(alg_b, files_b);
  rep.difference = rep.b.median - rep.a.median;
  rep.sign = rep.difference > 0 ? 1 : rep.difference < 0 ? -1 : 0;
  return rep;
}

void write_heatmap(const Heatmap& map, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open heatmap file '" + path.string() + "'");
  out << "agent,y";
  for (int x = 0; x < map.width; ++x) out << ",x" << x;
  out << '\n';
  for (int a = 0; a < map.agents; ++a) {
    for (int y = 0; y < map.height; ++y) {
      out << a << ',' << y;
      for (int x = 0; x < map.width; ++x) out << ',' << map.at(a, x, y);
      out << '\n';
    }
  }
}

Heatmap read_heatmap(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PreconditionError("cannot open heatmap file '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  Heatmap map;
  map.width = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 1;
  std::vector<std::vector<std::uint64_t>> lines;
  std::vector<int> agent_of;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::uint64_t> vals;
    while (std::getline(ls, field, ',')) vals.push_back(std::stoull(field));
    if (static_cast<int>(vals.size()) != map.width + 2) throw PreconditionError("malformed heatmap row in " + path.string());
    agent_of.push_back(static_cast<int>(vals[0]));
    lines.emplace_back(vals.begin() + 2, vals.end());
  }
  map.agents = agent_of.empty() ? 0 : agent_of.back() + 1;
  map.height = map.agents == 0 ? 0 : static_cast<int>(lines.size()) / map.agents;
  for (const auto& l : lines) map.counts.insert(map.counts.end(), l.begin(), l.end());
  return map;
}

}  // namespace ligs
