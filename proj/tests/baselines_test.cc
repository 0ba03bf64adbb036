// Copyright 2026 The recipgrad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "rg/baselines.h"
#include "rg/config.h"

namespace rg {
namespace {

Transition tr(double s, double a, double r, double s2, bool done) {
  return Transition{{s}, a, r, {s2}, done};
}

std::vector<const Transition*> ptrs(const std::vector<Transition>& ts) {
  std::vector<const Transition*> out;
  for (const auto& t : ts) out.push_back(&t);
  return out;
}

struct Fixed {
  std::vector<FixedAgent> agents;
  std::vector<Agent*> ptrs;
  explicit Fixed(const std::vector<std::string>& specs) {
    for (const auto& s : specs) agents.emplace_back(parse_fixed_agent(s));
    for (auto& a : agents) ptrs.push_back(&a);
  }
};

// Learner whose action net outputs p everywhere.
Learner constant_learner(double p, Rng& rng) {
  Learner l(LearnerSpec{}, TrainProtocol{}, rng);
  std::vector<double> theta(l.action_net().param_count(), 0.0);
  theta.back() = std::log(p / (1.0 - p));
  l.action_net().set_flat(theta);
  return l;
}

TEST(Lr2, Examples) {
  EXPECT_DOUBLE_EQ(lr2_shape(1.0, 0.5, 4.0), 3.0);
  EXPECT_DOUBLE_EQ(lr2_shape(0.0, 1.0, 4.0), 4.0);
  EXPECT_DOUBLE_EQ(lr2_shape(2.0, 0.5, 0.5), 1.5);
}

TEST(Replay, FifoAndCapacity) {
  ReplayBuffer b(3);
  for (int k = 0; k < 7; ++k) {
    b.push(tr(k, 0, 0, 0, false));
    EXPECT_EQ(b.size(), std::min<std::size_t>(k + 1, 3));
  }
  EXPECT_DOUBLE_EQ(b.at(0).state[0], 4.0);
  EXPECT_DOUBLE_EQ(b.at(1).state[0], 5.0);
  EXPECT_DOUBLE_EQ(b.at(2).state[0], 6.0);
  EXPECT_THROW(b.at(3), std::out_of_range);
  EXPECT_THROW(ReplayBuffer(0), std::invalid_argument);
}

TEST(Critic, PolyakIsExact) {
  Rng rng(1);
  Critic c(1, {8}, 1e-2, rng);
  std::vector<Transition> ts{tr(0.2, 0.3, 1.0, 0.1, false), tr(0.9, 0.1, -1.0, 0.4, true)};
  const std::vector<double> y{1.0, -1.0};
  c.fit(ptrs(ts), y);
  const std::vector<double> online = c.net().flat(), before = c.target().flat();
  c.polyak(0.005);
  const std::vector<double> after = c.target().flat();
  for (std::size_t i = 0; i < after.size(); ++i) EXPECT_EQ(after[i], 0.005 * online[i] + 0.995 * before[i]);
}

TEST(Critic, TerminalAndZeroDiscountTargetsAreRewards) {
  Rng rng(2);
  Critic c1(1, {8}, 1e-3, rng), c2(1, {8}, 1e-3, rng);
  PolicyNet actor(1, {4});
  actor.init_uniform(rng);
  std::vector<Transition> done{tr(0.1, 0.5, 0.7, 0.3, true), tr(0.6, 0.2, -0.2, 0.9, true)};
  for (BaselineMethod m : {BaselineMethod::kDpg, BaselineMethod::kDdpg, BaselineMethod::kTd3}) {
    BaselineOptions o;
    o.method = m;
    const std::vector<double> y = bellman_targets(ptrs(done), c1, &c2, actor, o, rng);
    EXPECT_EQ(y[0], 0.7);
    EXPECT_EQ(y[1], -0.2);
  }
  std::vector<Transition> live{tr(0.1, 0.5, 0.7, 0.3, false)};
  BaselineOptions o;
  o.gamma = 0.0;
  EXPECT_EQ(bellman_targets(ptrs(live), c1, &c2, actor, o, rng)[0], 0.7);
}

TEST(Critic, EqualTwinsGiveSingleCriticTarget) {
  Rng rng(3);
  Critic c1(1, {8}, 1e-3, rng);
  const Critic c2 = c1;
  PolicyNet actor(1, {4});
  actor.init_uniform(rng);
  std::vector<Transition> live{tr(0.1, 0.5, 0.7, 0.3, false), tr(0.8, 0.5, 0.1, 0.6, false)};
  BaselineOptions o;
  Rng a(9), b(9);
  const std::vector<double> twin = bellman_targets(ptrs(live), c1, &c2, actor, o, a);
  const std::vector<double> single = bellman_targets(ptrs(live), c1, nullptr, actor, o, b);
  EXPECT_EQ(twin, single);
}

TEST(Collect, NeverMatchedGivesNothing) {
  Rng rng(4);
  Fixed w({"L3", "L3"});
  Learner l(LearnerSpec{}, TrainProtocol{}, rng);
  GameConfig c;
  const EpisodeSeed seed{{{1, 2}, {2, 1}}, {0.5, 0.5, 0.5}};
  const RoleTransitions t = collect_transitions(l, w.ptrs, c, std::span<const EpisodeSeed>(&seed, 1), 0.1, rng);
  EXPECT_TRUE(t.action.empty());
  EXPECT_TRUE(t.signal.empty());
}

TEST(Collect, DonorRewardIsCostTimesAction) {
  Rng rng(5);
  Fixed w({"L3", "L3"});
  Learner l = constant_learner(0.4, rng);
  GameConfig c;
  const EpisodeSeed seed{{{0, 1}}, {0.5, 0.5, 0.5}};
  const RoleTransitions t = collect_transitions(l, w.ptrs, c, std::span<const EpisodeSeed>(&seed, 1), 0.0, rng);
  ASSERT_EQ(t.action.size(), 1u);
  EXPECT_NEAR(t.action[0].action, 0.4, 1e-12);
  EXPECT_NEAR(t.action[0].reward, -0.4, 1e-12);
  EXPECT_TRUE(t.action[0].done);
}

TEST(Collect, ZeroNoiseReproducesPolicy) {
  Rng rng(6);
  Fixed w({"L6", "L3"});
  Learner l(LearnerSpec{}, TrainProtocol{}, rng);
  GameConfig c;
  c.init = parse_init("uniform");
  const EpisodeSeed seed = draw_episode_seed(c, rng);
  const RoleTransitions t = collect_transitions(l, w.ptrs, c, std::span<const EpisodeSeed>(&seed, 1), 0.0, rng);
  ASSERT_FALSE(t.action.empty());
  ASSERT_FALSE(t.signal.empty());
  for (const Transition& x : t.action) EXPECT_EQ(x.action, l.action(x.state[0], 0.0));
  for (const Transition& x : t.signal) EXPECT_EQ(x.action, l.signal(x.state[0], x.state[1]));
  for (std::size_t k = 0; k + 1 < t.signal.size(); ++k) EXPECT_EQ(t.signal[k].next_state, t.signal[k + 1].state);
  EXPECT_TRUE(t.signal.back().done);
}

TEST(Actor, ConstantCriticGivesZeroGradient) {
  Rng rng(7);
  Critic c(1, {1}, 1e-3, rng);
  std::vector<double> theta(c.net().param_count(), 0.0);
  theta.back() = 2.5;
  c.mutable_net().set_flat(theta);
  PolicyNet actor(1, {4});
  actor.init_uniform(rng);
  NetOptimizer opt(actor, 1e-2);
  std::vector<Transition> ts{tr(0.1, 0.5, 0, 0, true), tr(0.7, 0.5, 0, 0, true)};
  const std::vector<double> before = actor.flat();
  EXPECT_EQ(actor_update(actor, opt, c, ptrs(ts)), 0.0);
  EXPECT_EQ(actor.flat(), before);
}

TEST(Actor, IncreasingCriticPushesActionUp) {
  Rng rng(8);
  // Q(s, a) = tanh(a).
  Critic c(1, {1}, 1e-3, rng);
  c.mutable_net().set_flat(std::vector<double>{0.0, 1.0, 0.0, 1.0, 0.0});
  EXPECT_GT(c.dq_da(std::vector<double>{0.3}, 0.5), 0.0);
  PolicyNet actor(1, {4});
  actor.init_uniform(rng);
  NetOptimizer opt(actor, 5e-2);
  std::vector<Transition> ts;
  for (int k = 0; k <= 10; ++k) ts.push_back(tr(k / 10.0, 0.5, 0, 0, true));
  const double start = actor.eval(std::vector<double>{0.5});
  for (int k = 0; k < 300; ++k) actor_update(actor, opt, c, ptrs(ts));
  EXPECT_GT(actor.eval(std::vector<double>{0.5}), start);
  for (const auto& t : ts) EXPECT_GT(actor.eval(t.state), 0.95);
}

TEST(Trainer, SharesTheLearnerArchitecture) {
  Rng rng(9);
  LearnerSpec spec;
  spec.action_hidden = {64, 64};
  Learner reciprocity(spec, TrainProtocol{}, rng);
  Learner baseline(spec, TrainProtocol{}, rng);
  BaselineTrainer t(baseline, BaselineOptions{}, rng);
  EXPECT_EQ(t.action_role()->actor_target().param_count(), reciprocity.action_net().param_count());
  EXPECT_EQ(t.signal_role()->actor_target().param_count(), reciprocity.signal_net().param_count());
}

TEST(Trainer, Td3DelaysActorUpdates) {
  Rng rng(10);
  Fixed w({"HybridCoop(L3)", "AllD(L3)"});
  LearnerSpec spec;
  Learner l(spec, TrainProtocol{}, rng);
  BaselineOptions o;
  o.grad_steps = 4;
  o.batch = 8;
  BaselineTrainer t(l, o, rng);
  GameConfig c;
  c.init = parse_init("uniform");
  const std::vector<double> before = t.action_role()->critic(0).target().flat();
  t.iterate(w.ptrs, c, 2, rng);
  EXPECT_EQ(t.action_role()->critic_steps(), 8);
  EXPECT_NE(t.action_role()->critic(0).target().flat(), before);
  EXPECT_GT(t.action_role()->replay().size(), 0u);
}

TEST(Budget, JointBaselineCellsUseSixHundredTwentyFiveEpisodes) {
  for (const char* m : {"dpg", "ddpg", "td3"}) {
    const ExperimentSpec s =
        load_spec(std::string(RG_SOURCE_DIR) + "/configs/C_" + m + "_joint_hybrid.cfg");
    EXPECT_EQ(s.protocol.t_outer * s.protocol.n_play, 625) << m;
  }
}

}  // namespace
}  // namespace rg
