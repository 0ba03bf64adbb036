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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rg/game.h"
#include "rg/learner.h"
#include "rg/policy_net.h"

namespace rg {

// Model-free deterministic actor-critic baselines. Both learner nets are
// trained as separate actors: the action net on donor steps, the signal net
// on recipient steps. Nothing is differentiated through the game.

enum class BaselineMethod { kDpg, kDdpg, kTd3 };

std::string to_string(BaselineMethod m);
BaselineMethod parse_baseline_method(const std::string& s);

struct Transition {
  std::vector<double> state;
  double action = 0.0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
};

// Fixed-capacity FIFO ring.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Oldest surviving transition first.
  const Transition& at(std::size_t i) const;
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot of the oldest item once full
  std::vector<Transition> items_;
};

struct RoleTransitions {
  std::vector<Transition> action;  // learner as donor
  std::vector<Transition> signal;  // learner as recipient
  double mean_payoff = 0.0;
};

// Real rollouts with the learner's outputs perturbed by clamped N(0, sigma^2)
// noise. Rewards: -c * action on donor steps, b * donor action on recipient
// steps. A role's last step in an episode is terminal.
RoleTransitions collect_transitions(const Learner& learner, std::span<Agent* const> others,
                                    const GameConfig& config, std::span<const EpisodeSeed> episodes, double sigma,
                                    Rng& rng);
// Same, with rewards passed through lr2_shape using an EMA of the learner's
// own score (reset to 0.5 each episode) when kappa > 0.
RoleTransitions collect_transitions(const Learner& learner, std::span<Agent* const> others,
                                    const GameConfig& config, std::span<const EpisodeSeed> episodes, double sigma,
                                    Rng& rng, double lr2_kappa, double lr2_alpha);

// Q(s, a): MLP over the state with the action appended, tanh hidden, linear
// output, plus a Polyak-averaged target copy.
class Critic {
 public:
  Critic() = default;
  Critic(int state_dim, const std::vector<int>& hidden, double lr, Rng& rng);

  double q(std::span<const double> s, double a) const;
  double q_target(std::span<const double> s, double a) const;
  // dQ/da at (s, a).
  double dq_da(std::span<const double> s, double a) const;
  // One Adam step on mean (Q - y)^2. Returns the loss before the step.
  double fit(std::span<const Transition* const> batch, std::span<const double> targets);
  // target = tau * online + (1 - tau) * target.
  void polyak(double tau);

  const PolicyNet& net() const { return net_; }
  const PolicyNet& target() const { return target_; }
  PolicyNet& mutable_net() { return net_; }

 private:
  PolicyNet net_;
  PolicyNet target_;
  AdamState opt_;
};

struct BaselineOptions {
  BaselineMethod method = BaselineMethod::kTd3;
  std::vector<int> critic_hidden{64, 64};
  double critic_lr = 1e-3;
  double gamma = 0.98;
  double tau = 0.005;
  double rollout_noise = 0.1;
  double target_noise = 0.1;
  double target_clip = 0.2;
  int policy_delay = 2;
  int grad_steps = 32;  // per rollout, replay methods only
  int batch = 128;
  std::size_t capacity = 10000;
  // Reputation shaping; 0 disables it.
  double lr2_kappa = 0.0;
  double lr2_alpha = 0.5;
};

// kappa >= 1: r + kappa * P. Otherwise kappa * r + (1 - kappa) * P * r.
double lr2_shape(double reward, double reputation_ema, double kappa);

// Bellman targets for `batch` under `method`. actor_target is the policy
// used for the next action (the online actor for DPG).
std::vector<double> bellman_targets(std::span<const Transition* const> batch, const Critic& c1, const Critic* c2,
                                    const PolicyNet& actor_target, const BaselineOptions& options, Rng& rng);

// Ascent step on mean Q(s, pi(s)) with the critic held fixed. Returns the
// gradient norm.
double actor_update(PolicyNet& actor, NetOptimizer& opt, const Critic& critic,
                    std::span<const Transition* const> batch);

// One actor with its critics, targets and replay.
class ActorCriticRole {
 public:
  ActorCriticRole(const PolicyNet& actor, const BaselineOptions& options, Rng& rng);

  // Replay methods: stores the transitions and runs grad_steps updates.
  // DPG: a single on-policy update on exactly these transitions.
  void train(PolicyNet& actor, NetOptimizer& opt, const std::vector<Transition>& fresh, Rng& rng);

  const ReplayBuffer& replay() const { return replay_; }
  const Critic& critic(int k) const { return critics_[k]; }
  const PolicyNet& actor_target() const { return actor_target_; }
  long critic_steps() const { return critic_steps_; }
  double last_actor_grad() const { return last_actor_grad_; }

 private:
  void step(PolicyNet& actor, NetOptimizer& opt, std::span<const Transition* const> batch, Rng& rng);

  BaselineOptions options_;
  ReplayBuffer replay_;
  Critic critics_[2];
  PolicyNet actor_target_;
  long critic_steps_ = 0;
  double last_actor_grad_ = 0.0;
};

struct BaselineIterStats {
  double payoff = 0.0;  // mean over the rollouts, noise included
  double grad_action = 0.0;
  double grad_signal = 0.0;
};

// Drives the learner's trainable nets with a baseline method.
class BaselineTrainer {
 public:
  BaselineTrainer(Learner& learner, const BaselineOptions& options, Rng& rng);

  // n_play rollouts, each followed by its training pass.
  BaselineIterStats iterate(std::span<Agent* const> others, const GameConfig& config, int n_play, Rng& rng);

  const BaselineOptions& options() const { return options_; }
  const ActorCriticRole* action_role() const { return action_.get(); }
  const ActorCriticRole* signal_role() const { return signal_.get(); }

 private:
  Learner& learner_;
  BaselineOptions options_;
  std::unique_ptr<ActorCriticRole> action_;
  std::unique_ptr<ActorCriticRole> signal_;
  double rep_ema_ = 0.5;
};

}  // namespace rg
