#include <gtest/gtest.h>

#include <cmath>

#include "ligs/errors.hpp"
#include "ligs/generator.hpp"

using namespace ligs;

namespace {

struct Stream {
  std::vector<GeneratorDecision> steps;
};

// Runs decide over one episode of random states.
Stream run_episode(const GeneratorPolicies& gp, const PotentialNet& pot, const RunConfig& cfg,
                   SwitchSource source, int length, Rng& rng, int dim) {
  SwitchState ss;
  Stream out;
  Vector s = Vector::Random(dim);
  for (int t = 0; t < length; ++t) {
    Vector next(dim);
    for (int i = 0; i < dim; ++i) next[i] = rng.uniform(-1, 1);
    out.steps.push_back(decide(gp, ss, s, next, t + 1 == length, t, pot, rng, cfg, source));
    s = next;
  }
  return out;
}

}  // namespace

TEST(Generator, HeadsHaveRequestedShapes) {
  Rng rng(1);
  const GeneratorPolicies gp = make_generator(7, 3, {8}, rng);
  EXPECT_EQ(gp.switch_actor.output_dim(), 2);
  EXPECT_EQ(gp.reward_actor.output_dim(), 3);
  EXPECT_EQ(gp.switch_critic.output_dim(), 1);
  EXPECT_EQ(gp.reward_critic.input_dim(), 7);
  EXPECT_THROW(make_generator(7, 0, {8}, rng), PreconditionError);
}

TEST(Generator, SourceMapping) {
  EXPECT_EQ(switch_source_for(Algorithm::kLigs), SwitchSource::kPolicy);
  EXPECT_EQ(switch_source_for(Algorithm::kLigsRandomSwitch), SwitchSource::kRandom);
  EXPECT_EQ(switch_source_for(Algorithm::kLigsAlwaysOn), SwitchSource::kAlwaysOn);
}

TEST(Generator, OffStepsAreDummies) {
  Rng rng(2);
  RunConfig cfg;
  cfg.switch_cost = 0.3;
  const GeneratorPolicies gp = make_generator(4, 2, {8}, rng);
  const PotentialNet pot(4, 2, {8}, rng);
  int zeros = 0;
  for (int ep = 0; ep < 200; ++ep) {
    for (const auto& d : run_episode(gp, pot, cfg, SwitchSource::kPolicy, 10, rng, 4).steps) {
      if (d.q != 0) continue;
      ++zeros;
      EXPECT_EQ(d.theta, 0);
      EXPECT_EQ(d.intrinsic_f, 0.0);
      EXPECT_EQ(d.switch_cost_charge, 0.0);
    }
  }
  EXPECT_GT(zeros, 0);
}

TEST(Generator, IntrinsicArithmetic) {
  const std::vector<double> u{0.4, 0.4};
  const auto f = intrinsic_from_potentials(u, 0.99);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NEAR(f[0], -0.004, 1e-15);
}

TEST(Generator, OneChargePerActivation) {
  Rng rng(3);
  RunConfig cfg;
  cfg.switch_cost = 0.1;
  cfg.option_terminate_prob = 0.0;
  const GeneratorPolicies gp = make_generator(3, 1, {8}, rng);
  const PotentialNet pot(3, 1, {8}, rng);
  // Always on from t=0 with no termination: a single charge at the start.
  const Stream s = run_episode(gp, pot, cfg, SwitchSource::kAlwaysOn, 12, rng, 3);
  double charged = 0.0;
  for (std::size_t t = 0; t < s.steps.size(); ++t) {
    EXPECT_EQ(s.steps[t].q, 1);
    if (t > 0) EXPECT_EQ(s.steps[t].switch_cost_charge, 0.0);
    charged += s.steps[t].switch_cost_charge;
  }
  EXPECT_DOUBLE_EQ(charged, 0.1);
}

TEST(Generator, ChargesMatchSwitchOnTransitions) {
  Rng rng(4);
  RunConfig cfg;
  cfg.switch_cost = 0.25;
  const GeneratorPolicies gp = make_generator(3, 2, {8}, rng);
  const PotentialNet pot(3, 2, {8}, rng);
  for (SwitchSource src : {SwitchSource::kPolicy, SwitchSource::kRandom, SwitchSource::kAlwaysOn}) {
    for (SwitchOff off : {SwitchOff::kOption, SwitchOff::kPolicy}) {
      cfg.switch_off = off;
      for (int ep = 0; ep < 100; ++ep) {
        const Stream s = run_episode(gp, pot, cfg, src, 30, rng, 3);
        bool on = false;  // intrinsic stream state after the previous step
        int transitions = 0;
        int charges = 0;
        for (const auto& d : s.steps) {
          if (d.q == 1 && !on) ++transitions;
          on = d.q == 1 && !d.terminated;
          if (d.switch_cost_charge != 0.0) {
            ++charges;
            EXPECT_DOUBLE_EQ(d.switch_cost_charge, 0.25);
            EXPECT_TRUE(d.switched_on);
            EXPECT_EQ(d.potential, 0.0);
          }
        }
        ASSERT_EQ(charges, transitions);
      }
    }
  }
}

TEST(Generator, RewardArithmetic) {
  RunConfig cfg;
  Transition row;
  row.team_reward = 1.0;
  row.intrinsic_f = 0.2;
  row.q = 1;
  row.novelty = 0.05;
  EXPECT_NEAR(generator_reward(row, cfg), 1.25, 1e-15);
  EXPECT_EQ(generator_reward(Transition{}, cfg), 0.0);
  Transition on;
  on.intrinsic_f = 0.1;
  on.q = 1;
  on.switch_cost = 0.1;
  EXPECT_EQ(generator_reward(on, cfg), 0.0);
}

TEST(Generator, TelescopingHandExample) {
  const std::vector<double> u{0.0, 0.3, -0.2, 0.0};
  const auto f = intrinsic_from_potentials(u, 0.5);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_NEAR(f[0], 0.15, 1e-15);
  EXPECT_NEAR(f[1], -0.4, 1e-15);
  EXPECT_NEAR(f[2], 0.2, 1e-15);
  const std::vector<int> q{1, 1, 1};
  EXPECT_NEAR(telescoping_audit(f, q, 0.5), 0.0, 1e-15);
  const std::vector<int> off{0, 0, 0};
  EXPECT_EQ(telescoping_audit(f, off, 0.5), 0.0);
}

TEST(Generator, DecisionsTelescopePerEpisode) {
  Rng rng(5);
  RunConfig cfg;
  const GeneratorPolicies gp = make_generator(5, 3, {16}, rng);
  const PotentialNet pot(5, 3, {16}, rng);
  for (SwitchSource src : {SwitchSource::kPolicy, SwitchSource::kRandom, SwitchSource::kAlwaysOn}) {
    for (SwitchOff off : {SwitchOff::kOption, SwitchOff::kPolicy}) {
      cfg.switch_off = off;
      cfg.option_terminate_prob = 0.3;
      for (int ep = 0; ep < 200; ++ep) {
        const Stream s = run_episode(gp, pot, cfg, src, 20, rng, 5);
        std::vector<double> f;
        std::vector<int> q;
        for (const auto& d : s.steps) {
          f.push_back(d.intrinsic_f);
          q.push_back(d.q);
        }
        EXPECT_TRUE(s.steps.back().q == 0 || s.steps.back().next_potential == 0.0);
        ASSERT_LT(std::abs(telescoping_audit(f, q, cfg.gamma)), 1e-9);
      }
    }
  }
}

TEST(Generator, RandomPotentialsTelescope) {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const double gamma = rng.uniform(0.5, 0.999);
    // Random on/off segments, potentials zeroed at each boundary.
    std::vector<double> f;
    std::vector<int> q;
    double u = 0.0;
    bool on = false;
    for (int t = 0; t < 20; ++t) {
      if (!on && rng.bernoulli(0.5)) {
        on = true;
        u = 0.0;
      }
      if (!on) {
        f.push_back(0.0);
        q.push_back(0);
        continue;
      }
      const bool ends = t == 19 || rng.bernoulli(0.2);
      const double next = ends ? 0.0 : rng.uniform(-3, 3);
      f.push_back(gamma * next - u);
      q.push_back(1);
      u = next;
      on = !ends;
    }
    ASSERT_LT(std::abs(telescoping_audit(f, q, gamma)), 1e-9);
  }
}

TEST(Generator, AlwaysOnAndRandomSources) {
  Rng rng(7);
  RunConfig cfg;
  const GeneratorPolicies gp = make_generator(3, 1, {8}, rng);
  const PotentialNet pot(3, 1, {8}, rng);
  int on = 0;
  int total = 0;
  for (int ep = 0; ep < 500; ++ep) {
    for (const auto& d : run_episode(gp, pot, cfg, SwitchSource::kAlwaysOn, 20, rng, 3).steps) {
      EXPECT_EQ(d.q, 1);
      EXPECT_FALSE(d.consulted);
    }
    for (const auto& d : run_episode(gp, pot, cfg, SwitchSource::kRandom, 20, rng, 3).steps) {
      on += d.q;
      ++total;
      EXPECT_FALSE(d.consulted);
    }
  }
  EXPECT_NEAR(on / static_cast<double>(total), 0.5, 0.02);
}

namespace {

const Vector kStateA = (Vector(2) << 1.0, 0.0).finished();
const Vector kStateB = (Vector(2) << 0.0, 1.0).finished();

// One-step episodes in A or B; switching pays +1 in A and -1 in B through the
// novelty term.
RolloutBuffer toy_batch(const GeneratorPolicies& gp, Rng& rng, int n) {
  RolloutBuffer buf(n, 1);
  for (auto& row : buf.rows) {
    const bool in_a = rng.bernoulli(0.5);
    row.state = in_a ? kStateA : kStateB;
    row.next_state = row.state;
    row.done = true;
    double lp = 0.0;
    row.q = sample_action(predict_row(gp.switch_actor, row.state), rng, &lp);
    row.switch_log_prob = lp;
    row.switch_consulted = true;
    row.theta = sample_action(predict_row(gp.reward_actor, row.state), rng, &row.theta_log_prob);
    row.switch_value = predict_row(gp.switch_critic, row.state)[0];
    row.reward_value = predict_row(gp.reward_critic, row.state)[0];
    row.novelty = row.q == 1 ? (in_a ? 1.0 : -1.0) : 0.0;
    row.generator_reward = generator_reward(row, RunConfig{});
  }
  buf.switch_bootstrap = {0.0};
  buf.reward_bootstrap = {0.0};
  return buf;
}

double p_switch(const GeneratorPolicies& gp, const Vector& s) {
  return softmax(predict_row(gp.switch_actor, s))[1];
}

}  // namespace

TEST(Generator, AllOffBatchLeavesRewardHeadAlone) {
  Rng rng(8);
  GeneratorPolicies gp = make_generator(2, 2, {8}, rng);
  RolloutBuffer buf = toy_batch(gp, rng, 32);
  for (auto& row : buf.rows) {
    row.q = 0;
    row.generator_reward = rng.uniform(-1, 1);
  }
  const Vector reward_before = gp.reward_actor.params;
  const Vector switch_before = gp.switch_actor.params;
  RunConfig cfg;
  update_generator(gp, buf, cfg, rng);
  EXPECT_EQ(gp.reward_actor.params, reward_before);
  EXPECT_NE(gp.switch_actor.params, switch_before);
}

TEST(Generator, SingleChannelHasNoPolicyGradient) {
  Rng rng(9);
  GeneratorPolicies gp = make_generator(2, 1, {8}, rng);
  RolloutBuffer buf = toy_batch(gp, rng, 32);
  for (auto& row : buf.rows) row.q = 1;
  const Vector actor_before = gp.reward_actor.params;
  const Vector critic_before = gp.reward_critic.params;
  RunConfig cfg;
  const GeneratorLoss loss = update_generator(gp, buf, cfg, rng);
  EXPECT_NEAR(loss.reward_stats.policy_loss, 0.0, 1e-12);
  EXPECT_EQ(gp.reward_actor.params, actor_before);
  EXPECT_NE(gp.reward_critic.params, critic_before);
}

TEST(Generator, LearnsWhereToSwitch) {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    GeneratorPolicies gp = make_generator(2, 1, {16}, rng);
    RunConfig cfg;
    cfg.learning_rate = 3e-3;
    for (int it = 0; it < 300; ++it) {
      const RolloutBuffer buf = toy_batch(gp, rng, 64);
      update_generator(gp, buf, cfg, rng);
    }
    EXPECT_GT(p_switch(gp, kStateA), 0.9) << "seed " << seed;
    EXPECT_LT(p_switch(gp, kStateB), 0.1) << "seed " << seed;
  }
}

TEST(Generator, PotentialNetIsNeverTrained) {
  Rng rng(10);
  GeneratorPolicies gp = make_generator(2, 1, {8}, rng);
  const PotentialNet pot(2, 1, {8}, rng);
  const std::uint64_t before = pot.hash();
  RunConfig cfg;
  for (int it = 0; it < 20; ++it) {
    RolloutBuffer buf = toy_batch(gp, rng, 16);
    for (auto& row : buf.rows) row.intrinsic_f = pot.potential(row.state, 0);
    update_generator(gp, buf, cfg, rng);
  }
  EXPECT_EQ(pot.hash(), before);
}
