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

#include <gtest/gtest.h>

#include "rg/pdgame.h"

namespace rg {
namespace {

class ConstAgent : public Agent {
 public:
  explicit ConstAgent(double p) : p_(p) {}
  Var act(Tape& tape, Var, Var) override { return tape.constant(p_); }
  Var signal(Tape&, Var x, Var) override { return x; }

 private:
  double p_;
};

struct Fixed {
  std::vector<FixedAgent> agents;
  std::vector<Agent*> ptrs;
  explicit Fixed(const std::vector<std::string>& specs) {
    for (const auto& s : specs) agents.emplace_back(parse_fixed_agent(s));
    for (auto& a : agents) ptrs.push_back(&a);
  }
};

TEST(PDConfig, Validate) {
  EXPECT_NO_THROW(PDConfig{}.validate());
  PDConfig bad;
  bad.reward = 6.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = PDConfig{};
  bad.sucker = -4.0;
  bad.temptation = 7.0;  // 2R = 6 > T + S = 3
  EXPECT_NO_THROW(bad.validate());
  bad.sucker = 0.0;  // 2R = 6 < T + S = 7
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = PDConfig{};
  bad.tau = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(PDPayoff, MatrixEntriesAndMidpoint) {
  const PDConfig pd;
  EXPECT_DOUBLE_EQ(pd_payoff(pd, 1, 1), 3.0);
  EXPECT_DOUBLE_EQ(pd_payoff(pd, 1, 0), 0.0);
  EXPECT_DOUBLE_EQ(pd_payoff(pd, 0, 1), 5.0);
  EXPECT_DOUBLE_EQ(pd_payoff(pd, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(pd_payoff(pd, 0.5, 0.5), 2.25);
}

TEST(PDPayoff, TapePartialsMatchFiniteDifference) {
  const PDConfig pd;
  Tape tape(true);
  const Var x = tape.leaf(0.3), y = tape.leaf(0.8);
  const Var f = pd_payoff(pd, x, y);
  const std::vector<double> adj = tape.adjoints(f);
  const double h = 1e-6;
  EXPECT_NEAR(adj[x.id], (pd_payoff(pd, 0.3 + h, 0.8) - pd_payoff(pd, 0.3 - h, 0.8)) / (2 * h), 1e-8);
  EXPECT_NEAR(adj[y.id], (pd_payoff(pd, 0.3, 0.8 + h) - pd_payoff(pd, 0.3, 0.8 - h)) / (2 * h), 1e-8);
}

TEST(PDRound, HardActions) {
  const PDConfig pd;
  Rng rng(1);
  Tape tape(false);
  ConstAgent c(1.0), d(0.0);
  const Var s = tape.constant(0.5);
  const PDRound cc = pd_round(c, c, s, s, pd, rng, tape, true);
  EXPECT_EQ(cc.payoff_i.value(), 3.0);
  EXPECT_EQ(cc.payoff_j.value(), 3.0);
  const PDRound cd = pd_round(c, d, s, s, pd, rng, tape, true);
  EXPECT_EQ(cd.payoff_i.value(), 0.0);
  EXPECT_EQ(cd.payoff_j.value(), 5.0);
  // Identity gossip reports the partner's action.
  EXPECT_EQ(cd.signal_about_j.value(), 0.0);
  EXPECT_EQ(cd.signal_about_i.value(), 1.0);
}

TEST(PDRound, DonationEmbedding) {
  const double b = 2.0, c = 1.0;
  PDConfig pd;
  pd.reward = b - c;
  pd.temptation = b;
  pd.sucker = -c;
  pd.punishment = 0.0;
  pd.validate();
  for (double x : {0.0, 1.0}) {
    for (double y : {0.0, 1.0}) {
      // i donates x to j, then j donates y to i.
      EXPECT_DOUBLE_EQ(pd_payoff(pd, x, y), b * y - c * x);
      EXPECT_DOUBLE_EQ(pd_payoff(pd, y, x), b * x - c * y);
    }
  }
}

TEST(PDGradient, MatchesFiniteDifferenceWithCommonNoise) {
  GameConfig g;
  g.init = parse_init("uniform");
  g.discount = 0.98;
  const PDConfig pd;
  Rng rng(2);
  LearnerSpec spec;
  spec.train_signal = true;
  spec.signal_arity = 2;
  Learner learner(spec, TrainProtocol{}, rng);
  Fixed w({"L6", "ProudCoop(L3)"});
  const EpisodeSeed seed = draw_episode_seed(g, rng);
  const std::span<const EpisodeSeed> one(&seed, 1);
  auto run = [&]() {
    Rng noise(77);
    return pd_batch_gradient(learner, w.ptrs, g, pd, one, noise);
  };
  const BatchGradient grad = run();
  for (PolicyNet* net : {&learner.action_net(), &learner.signal_net()}) {
    const std::vector<double>& analytic = net == &learner.action_net() ? grad.action : grad.signal;
    const std::vector<double> theta = net->flat();
    const double eps = 1e-6;
    for (std::size_t k = 0; k < theta.size(); k += 5) {
      std::vector<double> up = theta, dn = theta;
      up[k] += eps;
      dn[k] -= eps;
      net->set_flat(up);
      const double fu = run().mean_return;
      net->set_flat(dn);
      const double fd = run().mean_return;
      net->set_flat(theta);
      EXPECT_NEAR(analytic[k], (fu - fd) / (2 * eps), 1e-3 * std::max(1.0, std::abs(analytic[k])));
    }
  }
}

TEST(PDEpisode, RoundsCountOnlyLearnerMatches) {
  GameConfig g;
  const PDConfig pd;
  ConstAgent a(1.0), b(1.0), c(1.0);
  std::vector<Agent*> seats{&a, &b, &c};
  const EpisodeSeed seed{{{0, 1}, {1, 2}, {2, 0}}, {0.5, 0.5, 0.5}};
  Rng rng(3);
  Tape tape(false);
  const PDEpisodeResult r = play_pd_episode(seats, g, pd, seed, rng, tape, true);
  EXPECT_EQ(r.rounds, 2);
  EXPECT_DOUBLE_EQ(r.per_round(), 3.0);
}

TEST(PDEvaluate, CooperatorsEarnReward) {
  GameConfig g;
  g.init = parse_init("uniform");
  const PDConfig pd;
  Rng rng(4);
  Learner learner(LearnerSpec{}, TrainProtocol{}, rng);
  std::vector<double> theta(learner.action_net().param_count(), 0.0);
  theta.back() = 30.0;
  learner.action_net().set_flat(theta);
  ConstAgent c1(1.0), c2(1.0);
  std::vector<Agent*> others{&c1, &c2};
  EXPECT_NEAR(pd_evaluate(learner, others, g, pd, 4, rng), 3.0, 1e-12);
}

}  // namespace
}  // namespace rg
