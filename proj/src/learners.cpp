#include "ligs/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ligs/errors.hpp"

namespace ligs {
namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite ") + what);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

double policy_minibatch(ParamStore& actor, const PpoSamples& s, std::span<const std::size_t> rows,
                        const PpoSettings& cfg, double* entropy_out) {
  const Matrix x = gather_rows(s.inputs, rows);
  auto [logits, tape] = forward(actor, x);
  const auto nb = static_cast<double>(rows.size());

  double mean = 0.0;
  for (std::size_t r : rows) mean += s.advantages[r];
  mean /= nb;
  double var = 0.0;
  for (std::size_t r : rows) var += (s.advantages[r] - mean) * (s.advantages[r] - mean);
  const double stddev = std::sqrt(var / nb);

  Matrix dlogits = Matrix::Zero(logits.rows(), logits.cols());
  double loss = 0.0;
  double entropy = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const Vector z = logits.row(row).transpose();
    check_finite(z, "logits in policy update");
    const Vector logp = log_softmax(z);
    const Vector p = logp.array().exp();
    const int a = s.actions[rows[k]];
    const double ratio = std::exp(logp[a] - s.old_log_probs[rows[k]]);
    const double adv = (s.advantages[rows[k]] - mean) / (stddev + 1e-8);
    const SurrogateTerm term = clipped_surrogate(ratio, adv, cfg.clip_eps);
    loss -= term.value / nb;
    const double h = -(p.array() * logp.array()).sum();
    entropy += h / nb;
    const double dlogp = -term.dvalue_dlogp / nb;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
      const double onehot = j == a ? 1.0 : 0.0;
      dlogits(row, j) = dlogp * (onehot - p[j]) + cfg.entropy_coef / nb * p[j] * (logp[j] + h);
    }
  }
  if (!std::isfinite(loss)) throw NumericError("non-finite policy loss");
  backward(actor, tape, dlogits);
  adam_step(actor, cfg.learning_rate, cfg.grad_clip_norm);
  *entropy_out = entropy;
  return loss;
}

double value_minibatch(ParamStore& critic, const PpoSamples& s, std::span<const std::size_t> rows,
                       const PpoSettings& cfg) {
  const Matrix x = gather_rows(s.inputs, rows);
  auto [v, tape] = forward(critic, x);
  const auto nb = static_cast<double>(rows.size());
  Matrix dv(v.rows(), 1);
  double mse = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double err = v(static_cast<Eigen::Index>(k), 0) - s.returns[rows[k]];
    mse += err * err / nb;
    dv(static_cast<Eigen::Index>(k), 0) = cfg.value_coef * 2.0 * err / nb;
  }
  if (!std::isfinite(mse)) throw NumericError("non-finite value loss");
  backward(critic, tape, dv);
  adam_step(critic, cfg.learning_rate, cfg.grad_clip_norm);
  return mse;
}

Vector with_agent_id(const Vector& state, int agent, int num_agents) {
  Vector x = Vector::Zero(state.size() + num_agents);
  x.head(state.size()) = state;
  x[state.size() + agent] = 1.0;
  return x;
}

}  // namespace

Vector softmax(const Vector& logits) {
  const Vector shifted = logits.array() - logits.maxCoeff();
  const Vector e = shifted.array().exp();
  return e / e.sum();
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

int sample_action(const Vector& logits, Rng& rng, double* log_prob) {
  check_finite(logits, "logits");
  const Vector p = softmax(logits);
  const int a = rng.categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  if (log_prob != nullptr) *log_prob = log_softmax(logits)[a];
  return a;
}

ActResult act(const AgentPolicy& policy, const Vector& input, Rng& rng) {
  if (input.size() != policy.actor.input_dim()) {
    throw PreconditionError("act: state has the wrong dimension for this actor");
  }
  ActResult out;
  out.action = sample_action(predict_row(policy.actor, input), rng, &out.log_prob);
  out.value = predict_row(policy.critic, input)[0];
  return out;
}

RolloutBuffer::RolloutBuffer(int length, int actors)
    : rollout_length(length),
      num_actors(actors),
      rows(static_cast<std::size_t>(length) * static_cast<std::size_t>(actors)),
      bootstrap_values(static_cast<std::size_t>(actors)),
      switch_bootstrap(static_cast<std::size_t>(actors), 0.0),
      reward_bootstrap(static_cast<std::size_t>(actors), 0.0) {}

GaeOutput compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                      double lambda) {
  if (rewards.size() != values.size() || rewards.size() != dones.size()) {
    throw PreconditionError("compute_gae: rewards, values and dones must have equal length");
  }
  const std::size_t n = rewards.size();
  GaeOutput out;
  out.advantages.assign(n, 0.0);
  out.value_targets.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    out.advantages[t] = next_adv;
    out.value_targets[t] = next_adv + values[t];
    next_value = values[t];
  }
  for (double a : out.advantages) {
    if (!std::isfinite(a)) throw NumericError("non-finite advantage");
  }
  return out;
}

SurrogateTerm clipped_surrogate(double ratio, double advantage, double clip_eps) {
  const double clipped_ratio = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  const double unclipped = ratio * advantage;
  const double clipped = clipped_ratio * advantage;
  if (unclipped <= clipped) return {unclipped, ratio * advantage, ratio, false};
  return {clipped, 0.0, clipped_ratio, true};
}

PpoSettings ppo_settings(const RunConfig& c) {
  return {c.num_epochs, c.num_minibatches, c.clip_eps, c.value_coef,
          c.entropy_coef, c.learning_rate, c.grad_clip_norm};
}

LossStats ppo_update(ParamStore* actor, ParamStore* critic, const PpoSamples& samples,
                     const PpoSettings& settings, Rng& rng) {
  const std::size_t n = samples.actions.size();
  if (samples.inputs.rows() != static_cast<Eigen::Index>(n) || samples.old_log_probs.size() != n ||
      samples.advantages.size() != n || samples.returns.size() != n || samples.policy_mask.size() != n) {
    throw PreconditionError("ppo_update: sample columns have unequal lengths");
  }
  LossStats stats;
  if (n == 0) return stats;
  const auto minibatches = static_cast<std::size_t>(settings.num_minibatches);
  for (int epoch = 0; epoch < settings.num_epochs; ++epoch) {
    const std::vector<std::size_t> order = shuffled_indices(n, rng);
    for (std::size_t mb = 0; mb < minibatches; ++mb) {
      const std::size_t lo = mb * n / minibatches;
      const std::size_t hi = (mb + 1) * n / minibatches;
      if (lo == hi) continue;
      const std::span<const std::size_t> rows(order.data() + lo, hi - lo);
      if (actor != nullptr) {
        std::vector<std::size_t> masked;
        for (std::size_t r : rows) {
          if (samples.policy_mask[r]) masked.push_back(r);
        }
        if (!masked.empty()) {
          double h = 0.0;
          stats.policy_loss += policy_minibatch(*actor, samples, masked, settings, &h);
          stats.entropy += h;
          ++stats.policy_steps;
        }
      }
      if (critic != nullptr) {
        stats.value_loss += value_minibatch(*critic, samples, rows, settings);
        ++stats.value_steps;
      }
    }
  }
  if (stats.policy_steps > 0) {
    stats.policy_loss /= stats.policy_steps;
    stats.entropy /= stats.policy_steps;
  }
  if (stats.value_steps > 0) stats.value_loss /= stats.value_steps;
  return stats;
}

double assemble_shaped_reward(const Transition& row, int agent, const RunConfig& config) {
  return config.extrinsic_coef * row.rewards[static_cast<std::size_t>(agent)] +
         config.intrinsic_coef * row.intrinsic_f * static_cast<double>(row.q);
}

MultiAgentLearner::MultiAgentLearner(int state_dim, int num_agents, int num_actions,
                                     LearnerMode mode, bool share_actor,
                                     const std::vector<int>& hidden, Rng& init_rng)
    : mode_(mode), state_dim_(state_dim), num_agents_(num_agents) {
  if (mode == LearnerMode::kMappo) {
    const int in = state_dim + num_agents;
    const int n_actors = share_actor ? 1 : num_agents;
    for (int i = 0; i < n_actors; ++i) actors_.push_back(make_mlp(in, hidden, num_actions, init_rng));
    critics_.push_back(make_mlp(in, hidden, 1, init_rng));
  } else {
    for (int i = 0; i < num_agents; ++i) {
      actors_.push_back(make_mlp(state_dim, hidden, num_actions, init_rng));
      critics_.push_back(make_mlp(state_dim, hidden, 1, init_rng));
    }
  }
}

const ParamStore& MultiAgentLearner::actor_for(int agent) const {
  return actors_.size() == 1 ? actors_[0] : actors_[static_cast<std::size_t>(agent)];
}

const ParamStore& MultiAgentLearner::critic_for(int agent) const {
  return critics_.size() == 1 ? critics_[0] : critics_[static_cast<std::size_t>(agent)];
}

Vector MultiAgentLearner::actor_input(const Vector& state, int agent) const {
  return mode_ == LearnerMode::kMappo ? with_agent_id(state, agent, num_agents_) : state;
}

Vector MultiAgentLearner::critic_input(const Vector& state, int agent) const {
  return mode_ == LearnerMode::kMappo ? with_agent_id(state, agent, num_agents_) : state;
}

MultiAgentLearner::JointAct MultiAgentLearner::act(const Vector& state, Rng& rng) const {
  if (state.size() != state_dim_) throw PreconditionError("learner act: state dimension mismatch");
  JointAct out;
  for (int i = 0; i < num_agents_; ++i) {
    double logp = 0.0;
    out.actions.push_back(sample_action(predict_row(actor_for(i), actor_input(state, i)), rng, &logp));
    out.log_probs.push_back(logp);
    out.values.push_back(predict_row(critic_for(i), critic_input(state, i))[0]);
  }
  return out;
}

std::vector<double> MultiAgentLearner::values(const Vector& state) const {
  std::vector<double> out;
  for (int i = 0; i < num_agents_; ++i) out.push_back(predict_row(critic_for(i), critic_input(state, i))[0]);
  return out;
}

LossStats MultiAgentLearner::update(const RolloutBuffer& buffer,
                                    const std::vector<std::vector<double>>& rewards,
                                    const RunConfig& config, Rng& rng) {
  const int T = buffer.rollout_length;
  const int A = buffer.num_actors;
  const std::size_t rows = buffer.rows.size();
  if (rewards.size() != rows) throw PreconditionError("learner update: reward rows do not match buffer");

  // Per-agent samples; inputs built with this agent's view.
  std::vector<PpoSamples> per_agent(static_cast<std::size_t>(num_agents_));
  for (int i = 0; i < num_agents_; ++i) {
    PpoSamples& s = per_agent[static_cast<std::size_t>(i)];
    const int in = static_cast<int>(actor_input(buffer.rows.front().state, i).size());
    s.inputs.resize(static_cast<Eigen::Index>(rows), in);
    s.actions.resize(rows);
    s.old_log_probs.resize(rows);
    s.advantages.resize(rows);
    s.returns.resize(rows);
    s.policy_mask.assign(rows, 1);
    for (int a = 0; a < A; ++a) {
      std::vector<double> r(static_cast<std::size_t>(T));
      std::vector<double> v(static_cast<std::size_t>(T));
      std::vector<std::uint8_t> d(static_cast<std::size_t>(T));
      for (int t = 0; t < T; ++t) {
        const std::size_t idx = static_cast<std::size_t>(t * A + a);
        r[static_cast<std::size_t>(t)] = rewards[idx][static_cast<std::size_t>(i)];
        v[static_cast<std::size_t>(t)] = buffer.rows[idx].values[static_cast<std::size_t>(i)];
        d[static_cast<std::size_t>(t)] = buffer.rows[idx].done ? 1 : 0;
      }
      const double boot = buffer.bootstrap_values[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
      const GaeOutput g = compute_gae(r, v, d, boot, config.gamma, config.gae_lambda);
      for (int t = 0; t < T; ++t) {
        const std::size_t idx = static_cast<std::size_t>(t * A + a);
        s.advantages[idx] = g.advantages[static_cast<std::size_t>(t)];
        s.returns[idx] = g.value_targets[static_cast<std::size_t>(t)];
      }
    }
    for (std::size_t idx = 0; idx < rows; ++idx) {
      const Transition& row = buffer.rows[idx];
      s.inputs.row(static_cast<Eigen::Index>(idx)) = actor_input(row.state, i).transpose();
      s.actions[idx] = row.actions[static_cast<std::size_t>(i)];
      s.old_log_probs[idx] = row.log_probs[static_cast<std::size_t>(i)];
    }
  }

  const PpoSettings settings = ppo_settings(config);
  LossStats total;
  const auto accumulate = [&total](const LossStats& s) {
    total.policy_loss += s.policy_loss;
    total.value_loss += s.value_loss;
    total.entropy += s.entropy;
    total.policy_steps += s.policy_steps;
    total.value_steps += s.value_steps;
  };

  if (mode_ == LearnerMode::kIppo) {
    for (int i = 0; i < num_agents_; ++i) {
      accumulate(ppo_update(&actors_[static_cast<std::size_t>(i)], &critics_[static_cast<std::size_t>(i)],
                            per_agent[static_cast<std::size_t>(i)], settings, rng));
    }
  } else {
    PpoSamples stacked;
    const Eigen::Index in = per_agent.front().inputs.cols();
    stacked.inputs.resize(static_cast<Eigen::Index>(rows) * num_agents_, in);
    for (int i = 0; i < num_agents_; ++i) {
      const PpoSamples& s = per_agent[static_cast<std::size_t>(i)];
      stacked.inputs.middleRows(static_cast<Eigen::Index>(rows) * i, static_cast<Eigen::Index>(rows)) = s.inputs;
      stacked.actions.insert(stacked.actions.end(), s.actions.begin(), s.actions.end());
      stacked.old_log_probs.insert(stacked.old_log_probs.end(), s.old_log_probs.begin(), s.old_log_probs.end());
      stacked.advantages.insert(stacked.advantages.end(), s.advantages.begin(), s.advantages.end());
      stacked.returns.insert(stacked.returns.end(), s.returns.begin(), s.returns.end());
      stacked.policy_mask.insert(stacked.policy_mask.end(), s.policy_mask.begin(), s.policy_mask.end());
    }
    if (actors_.size() == 1) {
      accumulate(ppo_update(&actors_[0], &critics_[0], stacked, settings, rng));
    } else {
      for (int i = 0; i < num_agents_; ++i) {
        accumulate(ppo_update(&actors_[static_cast<std::size_t>(i)], nullptr,
                              per_agent[static_cast<std::size_t>(i)], settings, rng));
      }
      accumulate(ppo_update(nullptr, &critics_[0], stacked, settings, rng));
    }
  }
  const int groups = mode_ == LearnerMode::kIppo ? num_agents_ : (actors_.size() == 1 ? 1 : num_agents_ + 1);
  total.policy_loss /= groups;
  total.value_loss /= groups;
  total.entropy /= groups;
  return total;
}

}  // namespace ligs
