#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cbm/case_config.hpp"
#include "cbm/ddqn.hpp"
#include "cbm/errors.hpp"

using namespace cbm;

namespace {

// Single linear layer whose output is W * s + b for a one-dimensional input.
Mlp linear_head(std::array<double, 3> w, std::array<double, 3> b = {0, 0, 0}) {
  Mlp net({1, 3}, {Activation::Linear});
  for (int a = 0; a < 3; ++a) {
    net.weights(0)(a, 0) = w[a];
    net.bias(0)[a] = b[a];
  }
  return net;
}

}  // namespace

TEST(Exploration, FollowsClosedFormAndFloor) {
  ExplorationSchedule s;
  EXPECT_EQ(s.epsilon(), 1.0);
  double prev = s.epsilon();
  for (int t = 1; t <= 2000; ++t) {
    s.advance();
    EXPECT_DOUBLE_EQ(s.epsilon(), std::max(0.01, std::pow(0.995, t)));
    EXPECT_LE(s.epsilon(), prev);
    prev = s.epsilon();
  }
  EXPECT_EQ(s.epsilon(), 0.01);
  EXPECT_THROW(ExplorationSchedule(0.5, 0.6, 0.1), ParameterError);
}

TEST(SelectAction, PureExplorationIsUniform) {
  const Mlp net = linear_head({0.1, 0.9, 0.3});
  RngStream rng(1, 1);
  std::array<int, 3> counts{};
  const double obs[] = {1.0};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[select_action(net, obs, 1.0, rng)];
  for (int c : counts) EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 3.0, 0.02 / 3.0);
}

TEST(SelectAction, GreedyArgmaxWithLowestIndexTieBreak) {
  RngStream rng(1, 1);
  const double obs[] = {1.0};
  EXPECT_EQ(select_action(linear_head({0.1, 0.9, 0.3}), obs, 0.0, rng), 1);
  EXPECT_EQ(select_action(linear_head({0.5, 0.5, 0.1}), obs, 0.0, rng), 0);
  EXPECT_EQ(select_action(linear_head({0, 0, 0}), obs, 0.0, rng), 0);
}

TEST(DdqnTarget, HandComputed) {
  const Mlp main = linear_head({0.1, 0.9, 0.3});
  const Mlp target = linear_head({5.0, 7.0, 11.0});
  const double s[] = {2.0}, s2[] = {1.0};
  Transition t{s, 0, -2.0, s2};
  // main picks a1 at s'; target evaluates it: -2 + 0.5 * 7.
  EXPECT_DOUBLE_EQ(ddqn_target(main, target, t, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(ddqn_target(main, target, t, 0.0), -2.0);
  // Identical networks: plain DQN target r + gamma * max Q.
  EXPECT_DOUBLE_EQ(ddqn_target(target, target, t, 0.5), -2.0 + 0.5 * 11.0);
  t.next_forced_action = 2;
  EXPECT_DOUBLE_EQ(ddqn_target(main, target, t, 0.5), -2.0 + 0.5 * 11.0);
}

TEST(ReplayBuffer, RingOverwritesOldest) {
  ReplayBuffer buf(3, 1);
  for (int i = 0; i < 5; ++i) {
    const double s[] = {double(i)}, s2[] = {double(i + 1)};
    buf.push(s, i % 3, -i, s2, i == 4 ? 2 : -1);
  }
  ASSERT_EQ(buf.size(), 3u);
  EXPECT_EQ(buf.at(0).state[0], 2.0);
  EXPECT_EQ(buf.at(2).state[0], 4.0);
  EXPECT_EQ(buf.at(2).next_state[0], 5.0);
  EXPECT_EQ(buf.at(2).reward, -4.0);
  EXPECT_EQ(buf.at(2).next_forced_action, 2);
  EXPECT_EQ(buf.at(1).next_forced_action, -1);
  EXPECT_THROW(buf.at(3), std::out_of_range);
}

TEST(ReplayBuffer, SamplesDistinctSlotsUniformly) {
  ReplayBuffer buf(100, 1);
  for (int i = 0; i < 100; ++i) {
    const double s[] = {double(i)};
    buf.push(s, 0, 0.0, s);
  }
  RngStream rng(3, 3);
  std::vector<int> hits(100, 0);
  for (int k = 0; k < 2000; ++k) {
    const auto idx = buf.sample_indices(64, rng);
    ASSERT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 64u);
    for (auto i : idx) {
      ASSERT_LT(i, 100u);
      ++hits[i];
    }
  }
  // Each slot is drawn with probability 0.64 per batch.
  for (int h : hits) EXPECT_NEAR(h / 2000.0, 0.64, 0.05);
  EXPECT_THROW(buf.sample_indices(101, rng), ParameterError);
}

TEST(Agent, ConfigValidation) {
  AgentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.batch_size = 20000;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(Agent, StoredTransitionsRespectForcedReplacement) {
  const auto model = builtin_case(2).model();
  MaintenanceRlEnv env(model, 5);
  AgentConfig cfg;
  cfg.episodes = 4;
  int checked = 0;
  train(env, cfg, {}, [&](const Transition& t) {
    if (t.state[0] >= 1.0) {
      EXPECT_EQ(t.action, 2);
      EXPECT_EQ(t.reward, -5500.0);
    }
    EXPECT_EQ(t.next_forced_action, t.next_state[0] >= 1.0 ? 2 : -1);
    ++checked;
  });
  EXPECT_EQ(checked, 2000);
}

TEST(Agent, TrainingIsDeterministic) {
  const auto model = builtin_case(2).model();
  AgentConfig cfg;
  cfg.episodes = 3;
  cfg.seed = 42;
  const auto a = train(model, cfg);
  const auto b = train(model, cfg);
  EXPECT_EQ(a.network.parameters(), b.network.parameters());
  ASSERT_EQ(a.log.size(), 3u);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].cumulative_reward, b.log[i].cumulative_reward);
    EXPECT_EQ(a.log[i].mean_loss, b.log[i].mean_loss);
  }
  cfg.seed = 43;
  EXPECT_NE(train(model, cfg).network.parameters(), a.network.parameters());
}

TEST(Agent, ShortTrainingBeatsDoingNothing) {
  const auto model = builtin_case(2).model();
  AgentConfig cfg;
  cfg.episodes = 60;
  const auto result = train(model, cfg);
  const auto policy = greedy_policy(result.network, model.costs.failure_threshold);
  const auto idle = [](const DecisionContext&) { return Action::NoAction; };
  double agent = 0.0, baseline = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (const auto& o : run_episode(policy, 500, model, RngStream(77, i), RngStream(78, i))) agent += o.reward;
    for (const auto& o : run_episode(idle, 500, model, RngStream(77, i), RngStream(78, i))) baseline += o.reward;
  }
  EXPECT_GT(agent, baseline);
}

TEST(GreedyPolicy, ZeroNetworkNeverActs) {
  Mlp net({2, 3}, {Activation::Linear});
  const auto policy = greedy_policy(net, 8.0);
  DecisionContext ctx;
  ctx.state = {7.5, 2.0};
  EXPECT_EQ(policy(ctx), Action::NoAction);
}
