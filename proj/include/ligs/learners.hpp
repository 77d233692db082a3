#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ligs/config.hpp"
#include "ligs/mlp.hpp"
#include "ligs/rng.hpp"

namespace ligs {

Vector softmax(const Vector& logits);
Vector log_softmax(const Vector& logits);

// Samples an index from softmax(logits). Throws NumericError on non-finite
// logits.
int sample_action(const Vector& logits, Rng& rng, double* log_prob = nullptr);

struct AgentPolicy {
  ParamStore actor;   // input -> action logits
  ParamStore critic;  // input -> scalar value
  int agent_id = 0;
};

struct ActResult {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

ActResult act(const AgentPolicy& policy, const Vector& input, Rng& rng);

// One buffer row: everything Algorithm-style collection records per actor
// step, plus the Generator's bookkeeping.
struct Transition {
  Vector state;
  Vector next_state;
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> rewards;  // per-agent environment rewards
  double team_reward = 0.0;
  bool done = false;

  // Generator side. q is the switch flag, theta the reward channel.
  int q = 0;
  int theta = 0;
  double intrinsic_f = 0.0;
  double switch_cost = 0.0;
  double novelty = 0.0;
  bool switch_consulted = false;
  double switch_log_prob = 0.0;
  double theta_log_prob = 0.0;
  double switch_value = 0.0;
  double reward_value = 0.0;
  double potential = 0.0;       // u_t
  double next_potential = 0.0;  // u_{t+1}
  double generator_reward = 0.0;
};

// rollout_length x num_actors rows stored time-major: row(t, a) = t * A + a.
struct RolloutBuffer {
  int rollout_length = 0;
  int num_actors = 0;
  std::vector<Transition> rows;
  // Critic values of the state after the last row, per actor and agent.
  std::vector<std::vector<double>> bootstrap_values;
  // Generator critics on the same states, per actor.
  std::vector<double> switch_bootstrap;
  std::vector<double> reward_bootstrap;

  RolloutBuffer() = default;
  RolloutBuffer(int length, int actors);
  Transition& at(int t, int actor) { return rows[static_cast<std::size_t>(t * num_actors + actor)]; }
  const Transition& at(int t, int actor) const {
    return rows[static_cast<std::size_t>(t * num_actors + actor)];
  }
};

struct GaeOutput {
  std::vector<double> advantages;
  std::vector<double> value_targets;
};

// delta_t = r_t + gamma v_{t+1} (1 - done_t) - v_t with v_T = bootstrap;
// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}; targets = A + v.
GaeOutput compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                      double lambda);

// Per-sample clipped surrogate min(rho A, clip(rho, 1-eps, 1+eps) A), its
// derivative with respect to the new log-probability, and whether the clipped
// branch was the active one.
struct SurrogateTerm {
  double value = 0.0;
  double dvalue_dlogp = 0.0;
  double used_ratio = 1.0;
  bool clipped = false;
};
SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_eps);

struct PpoSettings {
  int num_epochs = 4;
  int num_minibatches = 4;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 1e-4;
  double grad_clip_norm = 1.0;
};
PpoSettings ppo_settings(const RunConfig& config);

// Samples for one actor/critic pair. policy_mask selects rows whose action
// was actually taken by this actor; the critic always sees every row.
struct PpoSamples {
  Matrix inputs;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<std::uint8_t> policy_mask;
};

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  int policy_steps = 0;
  int value_steps = 0;
};

// Clipped-surrogate PPO: num_epochs x num_minibatches, advantages normalized
// per minibatch over masked rows (eps 1e-8), loss
//   -E[min(rho A, clip(rho) A)] + value_coef * MSE - entropy_coef * H.
// One adam_step per minibatch per network. Either network may be null; a
// minibatch with no masked rows leaves the actor untouched.
LossStats ppo_update(ParamStore* actor, ParamStore* critic, const PpoSamples& samples,
                     const PpoSettings& settings, Rng& rng);

// r_train = extrinsic_coef * r_i + intrinsic_coef * f * q. Novelty never enters.
double assemble_shaped_reward(const Transition& row, int agent, const RunConfig& config);

enum class LearnerMode { kMappo, kIppo };

// N-agent actor-critic. MAPPO: actor inputs carry an agent-id one-hot and the
// actor is shared unless share_actor is false; one centralized critic reads the
// global state plus the agent id. IPPO: a separate actor and critic per agent,
// both reading the plain global state.
class MultiAgentLearner {
 public:
  MultiAgentLearner(int state_dim, int num_agents, int num_actions, LearnerMode mode,
                    bool share_actor, const std::vector<int>& hidden, Rng& init_rng);

  struct JointAct {
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
  };
  JointAct act(const Vector& state, Rng& rng) const;
  std::vector<double> values(const Vector& state) const;

  // rewards[row][agent] are the training rewards aligned with buffer.rows.
  LossStats update(const RolloutBuffer& buffer, const std::vector<std::vector<double>>& rewards,
                   const RunConfig& config, Rng& rng);

  LearnerMode mode() const { return mode_; }
  int num_agents() const { return num_agents_; }
  const std::vector<ParamStore>& actors() const { return actors_; }
  const std::vector<ParamStore>& critics() const { return critics_; }
  Vector actor_input(const Vector& state, int agent) const;
  Vector critic_input(const Vector& state, int agent) const;

 private:
  const ParamStore& actor_for(int agent) const;
  const ParamStore& critic_for(int agent) const;

  LearnerMode mode_;
  int state_dim_;
  int num_agents_;
  std::vector<ParamStore> actors_;
  std::vector<ParamStore> critics_;
};

}  // namespace ligs
