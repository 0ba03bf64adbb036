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
#include <sstream>

#include <gtest/gtest.h>

#include "rg/learner.h"
#include "rg/opponents.h"
#include "rg/policy_net.h"

namespace rg {
namespace {

TEST(PolicyNet, ZeroWeightsGiveHalf) {
  PolicyNet net(2, {8});
  for (double x : {0.0, 0.3, 1.0}) {
    const std::vector<double> in{x, 1.0 - x};
    EXPECT_DOUBLE_EQ(net.eval(in), 0.5);
  }
  EXPECT_EQ(profile_std(net), 0.0);
}

TEST(PolicyNet, ArityMismatchThrows) {
  PolicyNet net(1, {4});
  const std::vector<double> in{0.1, 0.2};
  EXPECT_THROW(net.eval(in), std::invalid_argument);
}

TEST(PolicyNet, OutputInOpenUnitInterval) {
  Rng rng(1);
  PolicyNet net(1, {16, 16});
  net.init_uniform(rng);
  for (int k = 0; k <= 20; ++k) {
    const std::vector<double> in{k / 20.0};
    const double y = net.eval(in);
    EXPECT_GT(y, 0.0);
    EXPECT_LT(y, 1.0);
  }
}

TEST(PolicyNet, FusedForwardMatchesComposed) {
  Rng rng(2);
  PolicyNet net(2, {5, 3});
  net.init_uniform(rng);
  Tape tape;
  const auto blocks = net.bind(tape);
  std::vector<Var> x{tape.leaf(0.3), tape.leaf(0.8)};
  Var fused = net.forward(tape, x, &blocks);
  Var composed = net.forward_composed(tape, x, blocks);
  EXPECT_NEAR(fused.value(), composed.value(), 1e-15);
  const auto g1 = flatten_grads(backward(fused, blocks));
  const auto g2 = flatten_grads(backward(composed, blocks));
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g1[k], g2[k], 1e-14);
  const auto adj_f = tape.adjoints(fused), adj_c = tape.adjoints(composed);
  EXPECT_NEAR(adj_f[x[0].id], adj_c[x[0].id], 1e-14);
  EXPECT_NEAR(adj_f[x[1].id], adj_c[x[1].id], 1e-14);
}

TEST(ProfileStd, ClosedFormGrids) {
  std::vector<double> step(21, 0.0), ident(21);
  for (int k = 11; k < 21; ++k) step[k] = 1.0;
  for (int k = 0; k < 21; ++k) ident[k] = k / 20.0;
  EXPECT_NEAR(sample_std(step), 0.5117, 1e-4);
  EXPECT_NEAR(sample_std(ident), 0.3102, 1e-4);
  EXPECT_NEAR(sample_std(std::vector<double>(21, 0.7)), 0.0, 1e-12);
}

TEST(TrainProtocol, ValidateAndRatio) {
  TrainProtocol p;
  p.lr_action = 3e-5;
  p.lr_signal = 3e-3;
  EXPECT_NEAR(p.lr_ratio(), 100.0, 1e-9);
  EXPECT_NO_THROW(p.validate());
  p.batch = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(TrainProtocol, BudgetMatchingScalesOuterIterations) {
  TrainProtocol p;
  p.t_outer = 10;
  p.lr_action = 1e-4;
  p.budget_reference_lr = 1e-3;
  EXPECT_EQ(p.effective_outer_iters(), 100);
}

struct World {
  std::vector<FixedAgent> agents;
  std::vector<Agent*> ptrs;
  explicit World(const std::vector<std::string>& specs) {
    for (const auto& s : specs) agents.emplace_back(parse_fixed_agent(s));
    for (auto& a : agents) ptrs.push_back(&a);
  }
};

LearnerSpec joint_spec() {
  LearnerSpec s;
  s.action_hidden = {8};
  s.signal_hidden = {8};
  return s;
}

TEST(Reciprocity, FutureActionReceivedDependsOnTheta) {
  // Matching (0->2), (1->0): agent 1's action toward 0 reads 0's score, which
  // holds agent 2's signal about 0's first action.
  GameConfig c;
  c.benefit = 2.0;
  c.cost = 1.0;
  c.aggregator.window = 1;
  LearnerSpec spec = joint_spec();
  spec.train_signal = false;
  TrainProtocol p;
  Rng rng(3);
  Learner learner(spec, p, rng);
  World w({"L3", "L3"});
  Tape tape;
  LearnerAgent me(learner, tape, true);
  std::vector<Agent*> seats = seat_agents(&me, w.ptrs);
  EpisodeOptions opt;
  opt.tracked = {1};
  const EpisodeResult r = play_episode(seats, c, {{0, 2}, {1, 0}}, std::vector<double>(3, 0.5), tape, opt);
  // Agent 1's return is -c * a(1->0).
  const auto g = flatten_grads(backward(r.discounted_return[1], me.action_blocks()));
  double norm = 0.0;
  for (double v : g) norm += v * v;
  EXPECT_GT(norm, 0.0);
}

TEST(Reciprocity, LearnerAbsentGivesZeroGradient) {
  GameConfig c;
  TrainProtocol p;
  Rng rng(4);
  Learner learner(joint_spec(), p, rng);
  World w({"L3", "L6"});
  EpisodeSeed seed{{{1, 2}, {2, 1}, {1, 2}}, {0.5, 0.5, 0.5}};
  const BatchGradient g = batch_gradient(learner, w.ptrs, c, std::span<const EpisodeSeed>(&seed, 1));
  for (double v : g.action) EXPECT_EQ(v, 0.0);
  for (double v : g.signal) EXPECT_EQ(v, 0.0);
}

TEST(Reciprocity, DeterministicGivenSeed) {
  auto run = [] {
    GameConfig c;
    c.init = parse_init("uniform");
    TrainProtocol p;
    p.batch = 4;
    Rng rng(5);
    Learner learner(joint_spec(), p, rng);
    World w({"HybridCoop(L3)", "AllD(L3)"});
    std::vector<double> norms;
    for (int k = 0; k < 3; ++k) {
      const BatchGradient g = reciprocity_update(learner, w.ptrs, c, p, rng);
      norms.push_back(g.norm_action);
      norms.push_back(g.norm_signal);
    }
    return norms;
  };
  EXPECT_EQ(run(), run());
}

TEST(Reciprocity, SmallStepDoesNotDecreaseReturn) {
  GameConfig c;
  c.init = parse_init("uniform");
  TrainProtocol p;
  p.lr_action = 1e-5;
  p.lr_signal = 1e-5;
  Rng rng(6);
  Learner learner(joint_spec(), p, rng);
  World w({"HybridCoop(L3)", "AllD(L3)"});
  std::vector<EpisodeSeed> batch;
  for (int k = 0; k < 8; ++k) batch.push_back(draw_episode_seed(c, rng));
  const BatchGradient before = policy_gradient_step(learner, w.ptrs, c, batch);
  const BatchGradient after = batch_gradient(learner, w.ptrs, c, batch);
  EXPECT_GE(after.mean_return, before.mean_return - 1e-9);
}

TEST(Reciprocity, AllDefectorsDriveActionToZero) {
  GameConfig c;
  LearnerSpec spec;
  spec.action_hidden = {8};
  spec.train_signal = false;
  TrainProtocol p;
  p.lr_action = 3e-2;
  p.batch = 2;
  Rng rng(7);
  Learner learner(spec, p, rng);
  World w({"AllD(L3)", "AllD(L3)"});
  for (int k = 0; k < 150; ++k) reciprocity_update(learner, w.ptrs, c, p, rng);
  for (int k = 0; k <= 10; ++k) EXPECT_LT(learner.action(k / 10.0, 0.5), 0.02);
  Rng eval(8);
  const double payoff = evaluate_payoff(learner, w.ptrs, c, 8, eval);
  EXPECT_LE(payoff, 0.0);
  EXPECT_GT(payoff, -0.02);
}

TEST(Reciprocity, GradientMatchesFiniteDifference) {
  GameConfig c;
  c.init = parse_init("uniform");
  c.discount = 0.98;
  TrainProtocol p;
  Rng rng(9);
  Learner learner(joint_spec(), p, rng);
  World w({"HybridCoop(L3)", "L6"});
  const EpisodeSeed seed = draw_episode_seed(c, rng);
  const std::span<const EpisodeSeed> one(&seed, 1);
  const BatchGradient g = batch_gradient(learner, w.ptrs, c, one);
  std::vector<double> theta = learner.signal_net().flat();
  const double eps = 1e-6;
  for (std::size_t k = 0; k < theta.size(); k += 3) {
    std::vector<double> up = theta, dn = theta;
    up[k] += eps;
    dn[k] -= eps;
    learner.signal_net().set_flat(up);
    const double fu = batch_gradient(learner, w.ptrs, c, one).mean_return;
    learner.signal_net().set_flat(dn);
    const double fd = batch_gradient(learner, w.ptrs, c, one).mean_return;
    learner.signal_net().set_flat(theta);
    EXPECT_NEAR(g.signal[k], (fu - fd) / (2 * eps), 1e-5 * std::max(1.0, std::abs(g.signal[k])));
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  TrainProtocol p;
  p.lr_action = 3e-5;
  p.lr_signal = 3e-3;
  p.seeds = {4, 5};
  Rng rng(10);
  LearnerSpec spec = joint_spec();
  spec.signal_arity = 2;
  Learner a(spec, p, rng);
  std::stringstream ss;
  save_checkpoint(ss, a, p);
  Rng other(11);
  Learner b(spec, TrainProtocol{}, other);
  TrainProtocol q;
  load_checkpoint(ss, b, &q);
  EXPECT_EQ(a.action_net().flat(), b.action_net().flat());
  EXPECT_EQ(a.signal_net().flat(), b.signal_net().flat());
  EXPECT_EQ(to_text(p), to_text(q));

  LearnerSpec wider = spec;
  wider.action_hidden = {9};
  Learner c(wider, p, other);
  std::stringstream again;
  save_checkpoint(again, a, p);
  EXPECT_THROW(load_checkpoint(again, c), std::invalid_argument);
}

TEST(LearnerSpec, Validate) {
  LearnerSpec s;
  s.action_arity = 3;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace rg
