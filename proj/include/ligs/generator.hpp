#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ligs/config.hpp"
#include "ligs/learners.hpp"
#include "ligs/mlp.hpp"
#include "ligs/rng.hpp"

namespace ligs {

// Switch head (state -> 2 logits) and reward head (state -> m logits), each
// with its own state-value critic.
struct GeneratorPolicies {
  ParamStore switch_actor;
  ParamStore switch_critic;
  ParamStore reward_actor;
  ParamStore reward_critic;
};

GeneratorPolicies make_generator(int state_dim, int num_channels, const std::vector<int>& hidden,
                                 Rng& init_rng);

// Where q comes from. Everything downstream of q is shared by all three.
enum class SwitchSource { kPolicy, kRandom, kAlwaysOn };
SwitchSource switch_source_for(Algorithm alg);

// Per-actor stream state carried across steps (and across rollout
// boundaries, which are not episode ends).
struct SwitchState {
  int active = 0;
  int prev_theta = -1;
  double prev_potential = 0.0;
  std::vector<int> switch_times;

  // theta_{t+1} and u_{t+1} drawn during the previous step; reused as this
  // step's theta_t and u_t so the potential chain telescopes exactly.
  double carried_potential = 0.0;
  int carried_theta = -1;
  double carried_theta_log_prob = 0.0;

  // q for the next step, already drawn at s_{t+1} (per-state switching).
  int pending_q = -1;
  double pending_log_prob = 0.0;
  bool pending_consulted = false;

  void reset();
};

// Fixed random network state -> m potentials. Never trained.
class PotentialNet {
 public:
  PotentialNet(int state_dim, int num_channels, const std::vector<int>& hidden, Rng& init_rng);
  Vector potentials(const Vector& state) const;
  double potential(const Vector& state, int theta) const;
  const ParamStore& net() const { return net_; }
  std::uint64_t hash() const { return param_hash(net_); }

 private:
  ParamStore net_;
};

struct GeneratorDecision {
  int q = 0;
  int theta = 0;
  double intrinsic_f = 0.0;
  double switch_cost_charge = 0.0;

  bool consulted = false;  // switch head produced this q (trainable row)
  double switch_log_prob = 0.0;
  double theta_log_prob = 0.0;
  double potential = 0.0;       // u_t
  double next_potential = 0.0;  // u_{t+1}
  bool switched_on = false;
  bool terminated = false;
};

// One Generator step for the transition s_t -> s_{t+1}.
//
// Off: q is drawn by the source (switch head, fair coin, or always 1). A 0->1
// transition charges switch_cost once, records tick, and pins u_t = 0.
// On: q = 1 and theta_t, u_t are the values carried from the previous step.
// At step end the stream ends on episode end, on an option-termination coin
// (switch_off=option) or on a q = 0 drawn at s_{t+1} (switch_off=policy and
// the random source); an ending stream has u_{t+1} = 0. Otherwise
// theta_{t+1} ~ g(s_{t+1}) and u_{t+1} = pot(s_{t+1})[theta_{t+1}] are carried.
// f = gamma * u_{t+1} - u_t.
GeneratorDecision decide(const GeneratorPolicies& gp, SwitchState& ss, const Vector& state,
                         const Vector& next_state, bool episode_end, int tick,
                         const PotentialNet& pot, Rng& rng, const RunConfig& config,
                         SwitchSource source);

// team + f * q - switch cost + novelty.
double generator_reward(const Transition& row, const RunConfig& config);

struct GeneratorLoss {
  LossStats switch_stats;
  LossStats reward_stats;
};

// Two PPO updates on the generator_reward stream with generator_gamma: the
// switch head on rows where it chose q, the reward head on q = 1 rows.
GeneratorLoss update_generator(GeneratorPolicies& gp, const RolloutBuffer& buffer,
                               const RunConfig& config, Rng& rng);

// f_t = gamma * u_{t+1} - u_t for t < n - 1.
std::vector<double> intrinsic_from_potentials(std::span<const double> potentials, double gamma);

// sum_t gamma^t f_t q_t.
double telescoping_audit(std::span<const double> intrinsic, std::span<const int> q, double gamma);

}  // namespace ligs
