#include <gtest/gtest.h>

#include <algorithm>

#include "ligs/errors.hpp"
#include "ligs/learners.hpp"
#include "oracles.hpp"

using namespace ligs;

namespace {

AgentPolicy flat_policy(int in, int actions) {
  AgentPolicy p;
  p.actor = make_params(mlp_shapes(in, {}, actions));
  p.critic = make_params(mlp_shapes(in, {}, 1));
  return p;
}

double prob_of_first(const ParamStore& actor) {
  return softmax(predict_row(actor, Vector::Ones(1)))[0];
}

}  // namespace

TEST(Learners, UniformLogitsGiveUniformActions) {
  AgentPolicy p = flat_policy(3, 6);
  Rng rng(1);
  std::vector<int> hits(6, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++hits[act(p, Vector::Ones(3), rng).action];
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(n), 1.0 / 6.0, 0.02);
}

TEST(Learners, SaturatedLogitAlmostAlwaysChosen) {
  AgentPolicy p = flat_policy(1, 4);
  p.actor.params[p.actor.size() - 4 + 2] = 20.0;  // bias of action 2
  Rng rng(2);
  int hits = 0;
  for (int i = 0; i < 100000; ++i) hits += act(p, Vector::Zero(1), rng).action == 2;
  EXPECT_GE(hits, 99990);
}

TEST(Learners, ActIsDeterministicPerSeed) {
  Rng init(3);
  AgentPolicy p{make_mlp(5, {8}, 6, init), make_mlp(5, {8}, 1, init), 0};
  const Vector s = Vector::LinSpaced(5, -1.0, 1.0);
  Rng a(7);
  Rng b(7);
  const ActResult x = act(p, s, a);
  const ActResult y = act(p, s, b);
  EXPECT_EQ(x.action, y.action);
  EXPECT_EQ(x.log_prob, y.log_prob);
  EXPECT_EQ(x.value, y.value);
  EXPECT_THROW(act(p, Vector::Zero(4), a), PreconditionError);
}

TEST(Learners, NonFiniteLogitsAbort) {
  Rng rng(0);
  Vector logits(2);
  logits << 0.0, std::nan("");
  EXPECT_THROW(sample_action(logits, rng), NumericError);
}

TEST(Learners, GaeHandExample) {
  const std::vector<double> r{1.0, 0.0};
  const std::vector<double> v{0.5, 0.25};
  const std::vector<std::uint8_t> d{0, 0};
  const GaeOutput g = compute_gae(r, v, d, 0.0, 0.99, 0.95);
  EXPECT_NEAR(g.advantages[1], -0.25, 1e-15);
  EXPECT_NEAR(g.advantages[0], 0.512375, 1e-12);
  EXPECT_NEAR(g.value_targets[0], 0.512375 + 0.5, 1e-12);
}

TEST(Learners, GaeZeroAndOneStepCases) {
  const std::vector<double> zeros(5, 0.0);
  const std::vector<std::uint8_t> d{0, 0, 1, 0, 0};
  for (double a : compute_gae(zeros, zeros, d, 0.0, 0.9, 0.95).advantages) EXPECT_EQ(a, 0.0);

  const std::vector<double> r{0.3, -1.0, 2.0, 0.5, 0.1};
  const std::vector<double> v{0.1, 0.2, -0.3, 0.4, 0.0};
  const GaeOutput g = compute_gae(r, v, d, 0.7, 0.9, 0.0);
  for (std::size_t t = 0; t < r.size(); ++t) {
    const double next = t + 1 < r.size() ? v[t + 1] : 0.7;
    EXPECT_NEAR(g.advantages[t], r[t] + 0.9 * next * (1 - d[t]) - v[t], 1e-15);
  }
}

TEST(Learners, GaeLambdaOneMatchesDiscountedSums) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8);
    std::vector<double> r(n);
    std::vector<double> v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = rng.uniform(-1, 1);
      v[t] = rng.uniform(-1, 1);
      d[t] = rng.bernoulli(0.2);
    }
    const double boot = rng.uniform(-1, 1);
    const double gamma = rng.uniform(0.5, 0.999);
    const GaeOutput g = compute_gae(r, v, d, boot, gamma, 1.0);
    const auto ret = oracle::discounted_returns(r, d, boot, gamma);
    for (std::size_t t = 0; t < n; ++t) ASSERT_NEAR(g.advantages[t], ret[t] - v[t], 1e-10);
  }
}

TEST(Learners, GaeLengthMismatch) {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0};
  const std::vector<std::uint8_t> d{0, 0};
  EXPECT_THROW(compute_gae(a, b, d, 0.0, 0.9, 0.9), PreconditionError);
}

TEST(Learners, SurrogateUsesClippedRatio) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double ratio = std::exp(rng.uniform(-1.0, 1.0));
    const double adv = rng.uniform(-2.0, 2.0);
    const SurrogateTerm s = clipped_surrogate(ratio, adv, 0.2);
    const double clipped = std::clamp(ratio, 0.8, 1.2);
    ASSERT_DOUBLE_EQ(s.value, std::min(ratio * adv, clipped * adv));
    // Never more optimistic than the clipped ratio allows.
    ASSERT_LE(s.value, clipped * adv + 1e-15);
    if (s.clipped) {
      ASSERT_EQ(s.dvalue_dlogp, 0.0);
      ASSERT_GE(s.used_ratio, 0.8);
      ASSERT_LE(s.used_ratio, 1.2);
    }
  }
}

TEST(Learners, ShapedRewardArithmetic) {
  RunConfig c;
  Transition row;
  row.rewards = {0.4};
  row.intrinsic_f = 0.9;
  row.q = 0;
  EXPECT_DOUBLE_EQ(assemble_shaped_reward(row, 0, c), 0.4);
  row.rewards = {0.0};
  row.intrinsic_f = 0.3;
  row.q = 1;
  EXPECT_DOUBLE_EQ(assemble_shaped_reward(row, 0, c), 0.3);
  c.extrinsic_coef = 5.0;
  c.intrinsic_coef = 2.0;
  row.rewards = {1.0};
  row.intrinsic_f = 0.5;
  EXPECT_DOUBLE_EQ(assemble_shaped_reward(row, 0, c), 6.0);
  // Novelty never reaches the agents.
  row.novelty = 100.0;
  EXPECT_DOUBLE_EQ(assemble_shaped_reward(row, 0, c), 6.0);
}

namespace {

PpoSamples bandit_batch(const ParamStore& actor, const ParamStore& critic, Rng& rng, int n) {
  PpoSamples s;
  s.inputs = Matrix::Ones(n, 1);
  const Vector logits = predict_row(actor, Vector::Ones(1));
  const double v = predict_row(critic, Vector::Ones(1))[0];
  for (int i = 0; i < n; ++i) {
    double lp = 0.0;
    const int a = sample_action(logits, rng, &lp);
    const double r = a == 0 ? 1.0 : 0.0;
    s.actions.push_back(a);
    s.old_log_probs.push_back(lp);
    s.advantages.push_back(r - v);
    s.returns.push_back(r);
    s.policy_mask.push_back(1);
  }
  return s;
}

}  // namespace

TEST(Learners, RatioOneGivesZeroPolicyLoss) {
  Rng rng(6);
  ParamStore actor = make_mlp(1, {4}, 2, rng);
  ParamStore critic = make_mlp(1, {4}, 1, rng);
  PpoSamples s = bandit_batch(actor, critic, rng, 32);
  PpoSettings cfg;
  cfg.num_epochs = 1;
  cfg.num_minibatches = 1;
  const LossStats stats = ppo_update(&actor, &critic, s, cfg, rng);
  EXPECT_NEAR(stats.policy_loss, 0.0, 1e-12);
}

TEST(Learners, ZeroAdvantagesLeaveActorAlone) {
  Rng rng(7);
  ParamStore actor = make_mlp(1, {4}, 2, rng);
  ParamStore critic = make_mlp(1, {4}, 1, rng);
  PpoSamples s = bandit_batch(actor, critic, rng, 32);
  std::fill(s.advantages.begin(), s.advantages.end(), 0.0);
  PpoSettings cfg;
  cfg.entropy_coef = 0.0;
  const Vector before = actor.params;
  ppo_update(&actor, &critic, s, cfg, rng);
  EXPECT_EQ(actor.params, before);
}

TEST(Learners, EmptyPolicyMaskLeavesActorAlone) {
  Rng rng(8);
  ParamStore actor = make_mlp(1, {4}, 2, rng);
  ParamStore critic = make_mlp(1, {4}, 1, rng);
  PpoSamples s = bandit_batch(actor, critic, rng, 32);
  std::fill(s.policy_mask.begin(), s.policy_mask.end(), 0);
  const Vector before = actor.params;
  const Vector critic_before = critic.params;
  ppo_update(&actor, &critic, s, PpoSettings{}, rng);
  EXPECT_EQ(actor.params, before);
  EXPECT_NE(critic.params, critic_before);
}

TEST(Learners, BanditConverges) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    ParamStore actor = make_mlp(1, {16}, 2, rng);
    ParamStore critic = make_mlp(1, {16}, 1, rng);
    PpoSettings cfg;
    cfg.learning_rate = 3e-3;
    for (int it = 0; it < 200; ++it) {
      const PpoSamples s = bandit_batch(actor, critic, rng, 64);
      ppo_update(&actor, &critic, s, cfg, rng);
    }
    EXPECT_GT(prob_of_first(actor), 0.95) << "seed " << seed;
  }
}

TEST(Learners, MappoAndIppoWiring) {
  Rng rng(9);
  MultiAgentLearner mappo(20, 2, 6, LearnerMode::kMappo, true, {8}, rng);
  ASSERT_EQ(mappo.actors().size(), 1u);
  ASSERT_EQ(mappo.critics().size(), 1u);
  EXPECT_EQ(mappo.actors()[0].input_dim(), 22);
  EXPECT_EQ(mappo.actors()[0].output_dim(), 6);
  EXPECT_EQ(mappo.critics()[0].input_dim(), 22);
  EXPECT_EQ(mappo.critics()[0].output_dim(), 1);

  MultiAgentLearner unshared(20, 3, 6, LearnerMode::kMappo, false, {8}, rng);
  EXPECT_EQ(unshared.actors().size(), 3u);
  EXPECT_EQ(unshared.critics().size(), 1u);

  MultiAgentLearner ippo(20, 2, 6, LearnerMode::kIppo, true, {8}, rng);
  ASSERT_EQ(ippo.actors().size(), 2u);
  ASSERT_EQ(ippo.critics().size(), 2u);
  for (const auto& c : ippo.critics()) EXPECT_EQ(c.input_dim(), 20);
  EXPECT_NE(param_hash(ippo.critics()[0]), param_hash(ippo.critics()[1]));
}

TEST(Learners, UpdateMovesEveryNetwork) {
  for (LearnerMode mode : {LearnerMode::kMappo, LearnerMode::kIppo}) {
    Rng rng(10);
    MultiAgentLearner L(4, 2, 3, mode, true, {8}, rng);
    RolloutBuffer buf(8, 2);
    for (auto& row : buf.rows) {
      row.state = Vector::Random(4);
      const auto ja = L.act(row.state, rng);
      row.actions = ja.actions;
      row.log_probs = ja.log_probs;
      row.values = ja.values;
      row.rewards = {rng.uniform(), rng.uniform()};
    }
    for (auto& b : buf.bootstrap_values) b = {0.0, 0.0};
    std::vector<std::vector<double>> rewards;
    for (const auto& row : buf.rows) rewards.push_back(row.rewards);
    std::vector<Vector> before;
    for (const auto& p : L.actors()) before.push_back(p.params);
    for (const auto& p : L.critics()) before.push_back(p.params);
    RunConfig cfg;
    cfg.learning_rate = 1e-3;
    L.update(buf, rewards, cfg, rng);
    std::size_t k = 0;
    for (const auto& p : L.actors()) EXPECT_NE(p.params, before[k++]);
    for (const auto& p : L.critics()) EXPECT_NE(p.params, before[k++]);
  }
}
