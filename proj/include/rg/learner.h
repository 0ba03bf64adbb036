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


#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rg/game.h"
#include "rg/opponents.h"
#include "rg/policy_net.h"

namespace rg {

struct TrainProtocol {
  double lr_action = 1e-3;
  double lr_signal = 1e-3;
  int n_train = 1;   // policy updates per outer iteration
  int t_outer = 100;
  int n_play = 5;    // real episodes per outer iteration
  int batch = 1;     // episodes per policy update
  double explore_noise = 0.0;
  std::vector<std::uint64_t> seeds{0};
  // When positive, the outer-iteration count is rescaled by
  // budget_reference_lr / lr_action so that slower nets get more updates.
  double budget_reference_lr = 0.0;

  void validate() const;
  int effective_outer_iters() const;
  double lr_ratio() const { return lr_signal / lr_action; }
};

bool apply_protocol_key(TrainProtocol& p, const std::string& key, const std::string& value);
std::string to_text(const TrainProtocol& p);

struct LearnerSpec {
  std::vector<int> action_hidden{16};
  std::vector<int> signal_hidden{32};
  int action_arity = 1;  // recipient score [, own score]
  int signal_arity = 1;  // donor action [, own score]
  bool train_action = true;
  bool train_signal = true;
  // Rule used for any side that is not trained.
  FixedAgentSpec fixed_rule{FixedKind::kIdentity, std::nullopt};

  void validate() const;
};

// Agent 0: action and signal nets plus their optimizers.
class Learner {
 public:
  Learner(const LearnerSpec& spec, const TrainProtocol& protocol, Rng& init_rng);

  const LearnerSpec& spec() const { return spec_; }
  PolicyNet& action_net() { return action_; }
  PolicyNet& signal_net() { return signal_; }
  const PolicyNet& action_net() const { return action_; }
  const PolicyNet& signal_net() const { return signal_; }
  NetOptimizer& action_opt() { return opt_action_; }
  NetOptimizer& signal_opt() { return opt_signal_; }

  // Plain evaluation of the deployed policies.
  double action(double recipient_score, double own_score) const;
  double signal(double donor_action, double own_score) const;

  double profile_std_action() const;
  double profile_std_signal() const;

 private:
  LearnerSpec spec_;
  PolicyNet action_;
  PolicyNet signal_;
  NetOptimizer opt_action_;
  NetOptimizer opt_signal_;
};

// The learner on one tape. Trainable nets are bound as leaves when
// `differentiable` is set, otherwise their weights enter as constants.
class LearnerAgent : public Agent {
 public:
  LearnerAgent(const Learner& learner, Tape& tape, bool differentiable);
  Var act(Tape& tape, Var recipient_score, Var own_score) override;
  Var signal(Tape& tape, Var donor_action, Var own_score) override;

  const std::vector<BoundBlock>& action_blocks() const { return action_blocks_; }
  const std::vector<BoundBlock>& signal_blocks() const { return signal_blocks_; }

 private:
  const Learner& learner_;
  std::vector<BoundBlock> action_blocks_;
  std::vector<BoundBlock> signal_blocks_;
};

// Fixed-weight net pair in a seat. Arity 1 drops the score input.
class NetAgent : public Agent {
 public:
  NetAgent(PolicyNet action, PolicyNet signal);
  Var act(Tape& tape, Var recipient_score, Var own_score) override;
  Var signal(Tape& tape, Var donor_action, Var own_score) override;
  const PolicyNet& action_net() const { return action_; }
  const PolicyNet& signal_net() const { return signal_; }

 private:
  PolicyNet action_;
  PolicyNet signal_;
};

// Everything that makes an episode reproducible apart from the policies.
struct EpisodeSeed {
  MatchingSequence matching;
  std::vector<double> init;
};

EpisodeSeed draw_episode_seed(const GameConfig& config, Rng& rng);

// The learner always sits in seat 0; `others` fills seats 1..N-1.
std::vector<Agent*> seat_agents(Agent* learner, std::span<Agent* const> others);

struct BatchGradient {
  std::vector<double> action;  // flat, empty when the action side is fixed
  std::vector<double> signal;
  double mean_return = 0.0;  // discounted
  double mean_payoff = 0.0;  // undiscounted per-interaction
  double norm_action = 0.0;
  double norm_signal = 0.0;
};

// Mean gradient of the learner's discounted return over the batch. One
// tape and one reverse sweep per episode; summation order is the batch
// order, so results are bitwise reproducible.
BatchGradient batch_gradient(const Learner& learner, std::span<Agent* const> others,
                             const GameConfig& config, std::span<const EpisodeSeed> batch);

// Adam ascent on both trainable nets. Throws std::domain_error on a
// non-finite gradient.
void apply_gradient(Learner& learner, const BatchGradient& g);

BatchGradient policy_gradient_step(Learner& learner, std::span<Agent* const> others,
                                   const GameConfig& config, std::span<const EpisodeSeed> batch);

// Draws a fresh batch of protocol.batch episodes and takes one step.
BatchGradient reciprocity_update(Learner& learner, std::span<Agent* const> others,
                                 const GameConfig& config, const TrainProtocol& protocol, Rng& rng);

// Mean per-interaction payoff of the learner over `episodes` rollouts on a
// no-grad tape.
double evaluate_payoff(const Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                       int episodes, Rng& rng);
double evaluate_payoff(const Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                       std::span<const EpisodeSeed> seeds);

// Text checkpoint with shape headers; values in hexfloat so that a
// save/load round trip is exact.
void save_checkpoint(std::ostream& os, const Learner& learner, const TrainProtocol& protocol);
void load_checkpoint(std::istream& is, Learner& learner, TrainProtocol* protocol = nullptr);
void save_net(std::ostream& os, const std::string& name, const PolicyNet& net);
PolicyNet load_net(std::istream& is, std::string* name = nullptr);

}  // namespace rg
