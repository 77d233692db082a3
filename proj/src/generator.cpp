#include "ligs/generator.hpp"

#include <cmath>

#include "ligs/errors.hpp"

namespace ligs {

GeneratorPolicies make_generator(int state_dim, int num_channels, const std::vector<int>& hidden,
                                 Rng& init_rng) {
  if (num_channels < 1) throw PreconditionError("generator needs at least one reward channel");
  GeneratorPolicies gp;
  gp.switch_actor = make_mlp(state_dim, hidden, 2, init_rng);
  gp.switch_critic = make_mlp(state_dim, hidden, 1, init_rng);
  gp.reward_actor = make_mlp(state_dim, hidden, num_channels, init_rng);
  gp.reward_critic = make_mlp(state_dim, hidden, 1, init_rng);
  return gp;
}

SwitchSource switch_source_for(Algorithm alg) {
  switch (alg) {
    case Algorithm::kLigsRandomSwitch: return SwitchSource::kRandom;
    case Algorithm::kLigsAlwaysOn: return SwitchSource::kAlwaysOn;
    default: return SwitchSource::kPolicy;
  }
}

void SwitchState::reset() { *this = SwitchState{}; }

PotentialNet::PotentialNet(int state_dim, int num_channels, const std::vector<int>& hidden,
                           Rng& init_rng)
    : net_(make_mlp(state_dim, hidden, num_channels, init_rng)) {}

Vector PotentialNet::potentials(const Vector& state) const { return predict_row(net_, state); }

double PotentialNet::potential(const Vector& state, int theta) const {
  return potentials(state)[theta];
}

namespace {

struct Draw {
  int value = 0;
  double log_prob = 0.0;
  bool consulted = false;
};

Draw draw_switch(const GeneratorPolicies& gp, const Vector& state, Rng& rng, SwitchSource source) {
  Draw d;
  switch (source) {
    case SwitchSource::kAlwaysOn:
      d.value = 1;
      break;
    case SwitchSource::kRandom:
      d.value = rng.bernoulli(0.5) ? 1 : 0;
      break;
    case SwitchSource::kPolicy:
      d.value = sample_action(predict_row(gp.switch_actor, state), rng, &d.log_prob);
      d.consulted = true;
      break;
  }
  return d;
}

Draw draw_theta(const GeneratorPolicies& gp, const Vector& state, Rng& rng) {
  Draw d;
  d.value = sample_action(predict_row(gp.reward_actor, state), rng, &d.log_prob);
  return d;
}

}  // namespace

GeneratorDecision decide(const GeneratorPolicies& gp, SwitchState& ss, const Vector& state,
                         const Vector& next_state, bool episode_end, int tick,
                         const PotentialNet& pot, Rng& rng, const RunConfig& config,
                         SwitchSource source) {
  GeneratorDecision out;
  Draw q;
  if (ss.pending_q >= 0) {
    q = {ss.pending_q, ss.pending_log_prob, ss.pending_consulted};
    ss.pending_q = -1;
  } else if (ss.active == 1) {
    q.value = 1;  // option still running
  } else {
    q = draw_switch(gp, state, rng, source);
  }
  out.q = q.value;
  out.consulted = q.consulted;
  out.switch_log_prob = q.log_prob;

  if (out.q == 0) {
    ss.active = 0;
    ss.prev_theta = -1;
    ss.prev_potential = 0.0;
    ss.carried_theta = -1;
    ss.carried_potential = 0.0;
    return out;
  }

  if (ss.active == 0) {
    out.switched_on = true;
    out.switch_cost_charge = config.switch_cost;
    ss.switch_times.push_back(tick);
    const Draw theta = draw_theta(gp, state, rng);
    out.theta = theta.value;
    out.theta_log_prob = theta.log_prob;
    out.potential = 0.0;
  } else {
    out.theta = ss.carried_theta;
    out.theta_log_prob = ss.carried_theta_log_prob;
    out.potential = ss.carried_potential;
  }

  bool ends = episode_end;
  if (!ends) {
    if (source == SwitchSource::kAlwaysOn) {
      ends = false;
    } else if (source == SwitchSource::kPolicy && config.switch_off == SwitchOff::kOption) {
      ends = rng.bernoulli(config.option_terminate_prob);
    } else {
      const Draw next_q = draw_switch(gp, next_state, rng, source);
      ss.pending_q = next_q.value;
      ss.pending_log_prob = next_q.log_prob;
      ss.pending_consulted = next_q.consulted;
      ends = next_q.value == 0;
    }
  }

  ss.prev_theta = out.theta;
  ss.prev_potential = out.potential;
  if (ends) {
    out.terminated = true;
    out.next_potential = 0.0;
    ss.active = 0;
    ss.carried_theta = -1;
    ss.carried_potential = 0.0;
  } else {
    const Draw next_theta = draw_theta(gp, next_state, rng);
    out.next_potential = pot.potential(next_state, next_theta.value);
    ss.active = 1;
    ss.carried_theta = next_theta.value;
    ss.carried_theta_log_prob = next_theta.log_prob;
    ss.carried_potential = out.next_potential;
  }
  if (episode_end) ss.pending_q = -1;
  out.intrinsic_f = config.gamma * out.next_potential - out.potential;
  return out;
}

double generator_reward(const Transition& row, const RunConfig&) {
  return row.team_reward + row.intrinsic_f * static_cast<double>(row.q) - row.switch_cost +
         row.novelty;
}

namespace {

PpoSamples generator_samples(const RolloutBuffer& buffer, const RunConfig& config, bool switch_head) {
  const int T = buffer.rollout_length;
  const int A = buffer.num_actors;
  const std::size_t n = buffer.rows.size();
  PpoSamples s;
  s.inputs.resize(static_cast<Eigen::Index>(n), buffer.rows.front().state.size());
  s.actions.resize(n);
  s.old_log_probs.resize(n);
  s.advantages.resize(n);
  s.returns.resize(n);
  s.policy_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Transition& row = buffer.rows[i];
    s.inputs.row(static_cast<Eigen::Index>(i)) = row.state.transpose();
    if (switch_head) {
      s.actions[i] = row.q;
      s.old_log_probs[i] = row.switch_log_prob;
      s.policy_mask[i] = row.switch_consulted ? 1 : 0;
    } else {
      s.actions[i] = row.theta;
      s.old_log_probs[i] = row.theta_log_prob;
      s.policy_mask[i] = row.q == 1 ? 1 : 0;
    }
  }
  for (int a = 0; a < A; ++a) {
    std::vector<double> r(static_cast<std::size_t>(T));
    std::vector<double> v(static_cast<std::size_t>(T));
    std::vector<std::uint8_t> d(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      const Transition& row = buffer.at(t, a);
      r[static_cast<std::size_t>(t)] = row.generator_reward;
      v[static_cast<std::size_t>(t)] = switch_head ? row.switch_value : row.reward_value;
      d[static_cast<std::size_t>(t)] = row.done ? 1 : 0;
    }
    const double boot = switch_head ? buffer.switch_bootstrap[static_cast<std::size_t>(a)]
                                    : buffer.reward_bootstrap[static_cast<std::size_t>(a)];
    const GaeOutput g = compute_gae(r, v, d, boot, config.generator_gamma, config.gae_lambda);
    for (int t = 0; t < T; ++t) {
      const std::size_t idx = static_cast<std::size_t>(t * A + a);
      s.advantages[idx] = g.advantages[static_cast<std::size_t>(t)];
      s.returns[idx] = g.value_targets[static_cast<std::size_t>(t)];
    }
  }
  return s;
}

}  // namespace

GeneratorLoss update_generator(GeneratorPolicies& gp, const RolloutBuffer& buffer,
                               const RunConfig& config, Rng& rng) {
  if (buffer.rows.empty()) throw PreconditionError("update_generator: empty buffer");
  const PpoSettings settings = ppo_settings(config);
  GeneratorLoss out;
  out.switch_stats =
      ppo_update(&gp.switch_actor, &gp.switch_critic, generator_samples(buffer, config, true), settings, rng);
  out.reward_stats =
      ppo_update(&gp.reward_actor, &gp.reward_critic, generator_samples(buffer, config, false), settings, rng);
  return out;
}

std::vector<double> intrinsic_from_potentials(std::span<const double> potentials, double gamma) {
  std::vector<double> f;
  for (std::size_t t = 0; t + 1 < potentials.size(); ++t) {
    f.push_back(gamma * potentials[t + 1] - potentials[t]);
  }
  return f;
}

double telescoping_audit(std::span<const double> intrinsic, std::span<const int> q, double gamma) {
  if (intrinsic.size() != q.size()) throw PreconditionError("telescoping_audit: length mismatch");
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < intrinsic.size(); ++t) {
    total += discount * intrinsic[t] * static_cast<double>(q[t]);
    discount *= gamma;
  }
  return total;
}

}  // namespace ligs
