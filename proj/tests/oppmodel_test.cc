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
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "rg/oppmodel.h"

namespace rg {
namespace {

std::vector<int> seats(int n) {
  std::vector<int> v(n - 1);
  std::iota(v.begin(), v.end(), 1);
  return v;
}

struct World {
  std::vector<FixedAgent> agents;
  std::vector<Agent*> ptrs;
  explicit World(const std::vector<std::string>& specs) {
    for (const auto& s : specs) agents.emplace_back(parse_fixed_agent(s));
    for (auto& a : agents) ptrs.push_back(&a);
  }
};

// Random-weight opponents whose nets can be copied into surrogate slots.
struct NetWorld {
  std::vector<NetAgent> agents;
  std::vector<Agent*> ptrs;
  NetWorld(int n, Rng& rng) {
    for (int k = 1; k < n; ++k) {
      PolicyNet a(1, {32}), s(2, {32});
      a.init_uniform(rng);
      s.init_uniform(rng);
      agents.emplace_back(a, s);
    }
    for (auto& a : agents) ptrs.push_back(&a);
  }
};

SurrogateOptions exact_copy_options() {
  SurrogateOptions o;
  o.center_inputs = false;
  return o;
}

TEST(ObsBuffer, WindowDropsOldIterations) {
  ObsBuffer b(3);
  for (int t = 0; t < 10; ++t) {
    b.advance(t);
    for (int k = 0; k < 4; ++k) b.append(InteractionRecord{k, 1, 0, 0.5, 0.5, 0.5, 0.5}, t);
    for (int it : b.record_iters()) EXPECT_GT(it, t - 3);
    EXPECT_LE(b.size(), 12u);
  }
  EXPECT_EQ(b.size(), 12u);
}

TEST(ObsBuffer, CsvRoundTrip) {
  ObsBuffer b(5);
  b.append(InteractionRecord{0, 1, 2, 0.25, 0.5, 0.75, 0.125}, 0);
  b.append(InteractionRecord{1, 2, 1, 1.0, 0.0, 0.3, 0.9}, 1);
  std::stringstream ss;
  b.write_csv(ss);
  ObsBuffer c(5);
  c.read_csv(ss);
  ASSERT_EQ(c.size(), 2u);
  std::stringstream again;
  c.write_csv(again);
  std::stringstream first;
  b.write_csv(first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Surrogate, ConstantDefectorIsLearned) {
  World w({"AllD(L3)", "AllD(L3)"});
  Rng rng(1);
  ObsBuffer buf(10);
  for (int k = 0; k < 50; ++k) {
    buf.append(InteractionRecord{k, 1, 0, 0.0, uniform01(rng), uniform01(rng), 0.5}, 0);
    buf.append(InteractionRecord{k, 0, 1, uniform01(rng), uniform01(rng), uniform01(rng), 0.5}, 0);
  }
  SurrogateSet set(SurrogateOptions{}, {1}, rng);
  set.fit(buf, 1500, rng);
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) EXPECT_LT(std::abs(set.action(1, i / 10.0, j / 10.0)), 1e-2);
  }
}

TEST(Surrogate, UncoveredOpponentThrows) {
  Rng rng(2);
  ObsBuffer buf(10);
  buf.append(InteractionRecord{0, 1, 0, 0.0, 0.5, 0.5, 0.5}, 0);
  buf.append(InteractionRecord{0, 0, 1, 0.0, 0.5, 0.5, 0.5}, 0);
  SurrogateSet set(SurrogateOptions{}, {1, 2}, rng);
  try {
    set.fit(buf, 1, rng);
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Surrogate, FrozenSetRefusesFitting) {
  Rng rng(3);
  ObsBuffer buf(10);
  buf.append(InteractionRecord{0, 1, 0, 0.0, 0.5, 0.5, 0.5}, 0);
  buf.append(InteractionRecord{1, 0, 1, 0.0, 0.5, 0.5, 0.5}, 0);
  SurrogateSet set(SurrogateOptions{}, {1}, rng);
  set.freeze();
  EXPECT_THROW(set.fit(buf, 1, rng), std::logic_error);
}

TEST(Surrogate, SharedParameterCountIndependentOfN) {
  Rng rng(4);
  SurrogateOptions shared;
  shared.mode = SurrogateOptions::Mode::kShared;
  const SurrogateSet s5(shared, seats(5), rng), s30(shared, seats(30), rng);
  EXPECT_EQ(s5.param_count(), s30.param_count());
  const SurrogateSet p5(SurrogateOptions{}, seats(5), rng), p30(SurrogateOptions{}, seats(30), rng);
  EXPECT_EQ(p30.param_count() * 4, p5.param_count() * 29);
}

TEST(Surrogate, ExplorePretrainRecordsAndFreezes) {
  GameConfig c;
  c.init = parse_init("uniform");
  World w({"L6", "L6"});
  Rng rng(5);
  TrainProtocol p;
  LearnerSpec spec;
  spec.train_signal = false;
  Learner learner(spec, p, rng);
  ObsBuffer buf(10);
  SurrogateSet set(SurrogateOptions{}, seats(3), rng);
  explore_pretrain(w.ptrs, learner, c, 0, 800, buf, set, rng);
  EXPECT_EQ(buf.size(), 0u);
  EXPECT_FALSE(set.frozen());

  explore_pretrain(w.ptrs, learner, c, 100, 800, buf, set, rng);
  std::size_t expected = 0;
  for (const EpisodeSeed& e : buf.episodes()) expected += e.matching.size();
  EXPECT_EQ(buf.episodes().size(), 100u);
  EXPECT_EQ(buf.size(), expected);
  EXPECT_TRUE(set.frozen());
  const FixedAgentSpec l6 = parse_fixed_agent("L6");
  for (int agent : {1, 2}) EXPECT_LE(grid_mse(set, agent, l6).max(), 1e-4);
}

TEST(VirtualReplay, RequiresFrozenSet) {
  Rng rng(6);
  GameConfig c;
  TrainProtocol p;
  Learner learner(LearnerSpec{}, p, rng);
  SurrogateSet set(SurrogateOptions{}, seats(3), rng);
  const EpisodeSeed seed = draw_episode_seed(c, rng);
  EXPECT_THROW(virtual_replay_update(learner, set, c, std::span<const EpisodeSeed>(&seed, 1)), std::logic_error);
}

TEST(VirtualReplay, FreezeContractHoldsAcrossSteps) {
  Rng rng(7);
  GameConfig c;
  TrainProtocol p;
  Learner learner(LearnerSpec{}, p, rng);
  SurrogateSet set(SurrogateOptions{}, seats(3), rng);
  set.freeze();
  const std::uint64_t h = set.hash();
  for (int k = 0; k < 5; ++k) {
    const EpisodeSeed seed = draw_episode_seed(c, rng);
    virtual_replay_update(learner, set, c, std::span<const EpisodeSeed>(&seed, 1));
    EXPECT_EQ(set.hash(), h);
  }
}

TEST(VirtualReplay, ExactCopyMatchesOracleGradient) {
  Rng rng(8);
  GameConfig c;
  c.init = parse_init("uniform");
  c.discount = 0.98;
  NetWorld w(3, rng);
  SurrogateSet set(exact_copy_options(), seats(3), rng);
  for (int k = 1; k < 3; ++k) set.set_nets(k, w.agents[k - 1].action_net(), w.agents[k - 1].signal_net());
  set.freeze();
  TrainProtocol p;
  Learner learner(LearnerSpec{}, p, rng);
  std::vector<EpisodeSeed> batch;
  for (int k = 0; k < 4; ++k) batch.push_back(draw_episode_seed(c, rng));
  std::vector<SurrogateAgent> sur = surrogate_seats(set, 3);
  const BatchGradient oracle = batch_gradient(learner, w.ptrs, c, batch);
  const BatchGradient virt = batch_gradient(learner, agent_ptrs(sur), c, batch);
  ASSERT_EQ(oracle.action.size(), virt.action.size());
  for (std::size_t k = 0; k < oracle.action.size(); ++k) EXPECT_NEAR(oracle.action[k], virt.action[k], 1e-6);
  for (std::size_t k = 0; k < oracle.signal.size(); ++k) EXPECT_NEAR(oracle.signal[k], virt.signal[k], 1e-6);
  EXPECT_NEAR(virtual_optimism_gap(learner, set, w.ptrs, c, batch), 0.0, 1e-12);
}

TEST(VirtualReplay, PerturbedSurrogateGradientIsContinuous) {
  Rng rng(9);
  GameConfig c;
  c.init = parse_init("uniform");
  NetWorld w(3, rng);
  TrainProtocol p;
  Learner learner(LearnerSpec{}, p, rng);
  std::vector<EpisodeSeed> batch;
  for (int k = 0; k < 2; ++k) batch.push_back(draw_episode_seed(c, rng));
  const BatchGradient oracle = batch_gradient(learner, w.ptrs, c, batch);
  std::vector<double> deviation;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    SurrogateSet set(exact_copy_options(), seats(3), rng);
    Rng noise(10);
    for (int k = 1; k < 3; ++k) {
      PolicyNet a = w.agents[k - 1].action_net(), s = w.agents[k - 1].signal_net();
      std::vector<double> ta = a.flat(), ts = s.flat();
      for (double& v : ta) v += eps * normal(noise);
      for (double& v : ts) v += eps * normal(noise);
      a.set_flat(ta);
      s.set_flat(ts);
      set.set_nets(k, a, s);
    }
    std::vector<SurrogateAgent> sur = surrogate_seats(set, 3);
    const BatchGradient g = batch_gradient(learner, agent_ptrs(sur), c, batch);
    double d = 0.0;
    for (std::size_t k = 0; k < g.action.size(); ++k) d += std::pow(g.action[k] - oracle.action[k], 2);
    for (std::size_t k = 0; k < g.signal.size(); ++k) d += std::pow(g.signal[k] - oracle.signal[k], 2);
    deviation.push_back(std::sqrt(d));
  }
  EXPECT_GT(deviation[0], deviation[1]);
  EXPECT_GT(deviation[1], deviation[2]);
  EXPECT_LT(deviation[2], 0.05 * std::max(1.0, oracle.norm_action + oracle.norm_signal));
}

TEST(Coverage, OnPolicyFitIsWorseOffCluster) {
  // Records clustered near (1, 1) only.
  Rng rng(11);
  const FixedAgentSpec l6 = parse_fixed_agent("L6");
  ObsBuffer clustered(10);
  for (int k = 0; k < 500; ++k) {
    const double r = 0.85 + 0.15 * uniform01(rng), own = 0.85 + 0.15 * uniform01(rng);
    const double a = fixed_action(l6, r, own);
    clustered.append(InteractionRecord{k, 1, 0, a, r, own, 0.9}, 0);
    const double x = 0.85 + 0.15 * uniform01(rng);
    clustered.append(InteractionRecord{k, 0, 1, x, own, r, fixed_signal(l6, x, r)}, 0);
  }
  SurrogateSet set(SurrogateOptions{}, {1}, rng);
  set.fit(clustered, 100, rng);
  EXPECT_GT(grid_mse(set, 1, l6).max(), 1e-3);
}

}  // namespace
}  // namespace rg
