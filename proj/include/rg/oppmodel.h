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
#include <map>
#include <span>
#include <vector>

#include "rg/game.h"
#include "rg/learner.h"
#include "rg/opponents.h"
#include "rg/policy_net.h"

namespace rg {

// Sliding window of public observations and of the episodes they came from.
// Both are keyed by outer iteration.
class ObsBuffer {
 public:
  explicit ObsBuffer(int window = 10);

  int window() const { return window_; }
  // Drops everything recorded at iterations <= iter - window.
  void advance(int iter);
  void append(const InteractionRecord& r, int iter);
  void append_episode(const std::vector<InteractionRecord>& log, const EpisodeSeed& seed, int iter);

  std::size_t size() const { return records_.size(); }
  const std::vector<InteractionRecord>& records() const { return records_; }
  const std::vector<int>& record_iters() const { return record_iter_; }
  const std::vector<EpisodeSeed>& episodes() const { return episodes_; }

  void write_csv(std::ostream& os) const;
  // Replaces the records; episodes are left untouched.
  void read_csv(std::istream& is);

 private:
  int window_;
  std::vector<InteractionRecord> records_;
  std::vector<int> record_iter_;
  std::vector<EpisodeSeed> episodes_;
  std::vector<int> episode_iter_;
};

struct SurrogateOptions {
  enum class Mode { kPerOpponent, kShared };
  Mode mode = Mode::kPerOpponent;
  int action_arity = 1;  // recipient score [, own score]
  int signal_arity = 2;  // donor action [, own score]
  std::vector<int> hidden{32};
  int embed_dim = 8;
  // Nets see inputs shifted to [-0.5, 0.5]. Off for exact copies of nets
  // that take raw inputs.
  bool center_inputs = true;
  int minibatch = 64;  // <= 0: full batch
  // Count fitting steps in passes over the buffer rather than mini-batches.
  bool epoch_steps = true;
  double lr = 3e-3;
  double lr_final = 0.0;  // > 0: geometric decay to this value over each fit call
};

struct SurrogateMse {
  double action = 0.0;
  double signal = 0.0;
  double max() const { return action > signal ? action : signal; }
};

// Private estimators of the opponents' action and signal rules.
class SurrogateSet {
 public:
  SurrogateSet(const SurrogateOptions& options, std::vector<int> modeled, Rng& init_rng);

  const SurrogateOptions& options() const { return options_; }
  const std::vector<int>& modeled() const { return modeled_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  void unfreeze() { frozen_ = false; }

  double action(int agent, double recipient_score, double own_score) const;
  double signal(int agent, double donor_action, double own_score) const;
  // Parameters enter the tape as constants.
  Var action(Tape& tape, int agent, Var recipient_score, Var own_score) const;
  Var signal(Tape& tape, int agent, Var donor_action, Var own_score) const;

  // K mini-batch MSE steps per modeled opponent (both nets). Returns the
  // final full-buffer training MSE per opponent. Throws std::logic_error
  // when frozen and std::invalid_argument naming an opponent the buffer
  // does not cover.
  std::map<int, SurrogateMse> fit(const ObsBuffer& buffer, int steps, Rng& rng);

  // Copies a net pair into the per-opponent slot of `agent`.
  void set_nets(int agent, const PolicyNet& action, const PolicyNet& signal);

  std::size_t param_count() const;
  // FNV-1a over every parameter (and embedding) bit pattern.
  std::uint64_t hash() const;

 private:
  struct Fitted {
    PolicyNet net;
    AdamState opt;
  };
  int slot(int agent) const;
  double eval(const Fitted& f, int agent, double x0, double x1, int arity) const;
  Var eval_var(Tape& tape, const Fitted& f, int agent, Var x0, Var x1, int arity) const;
  // One Adam step on mean squared error over the given samples.
  double mse_step(Fitted& f, int agent, int arity, const std::vector<const InteractionRecord*>& batch,
                  bool action_side);
  double mse_full(const Fitted& f, int agent, int arity, const std::vector<const InteractionRecord*>& rows,
                  bool action_side) const;

  SurrogateOptions options_;
  std::vector<int> modeled_;
  std::map<int, int> slot_;
  bool frozen_ = false;
  std::vector<Fitted> action_;  // one per opponent, or one shared
  std::vector<Fitted> signal_;
  std::vector<std::vector<double>> embed_;  // shared mode only
  std::vector<AdamState> embed_opt_;
};

// Mean squared error between surrogate and true rule on a 32x32 uniform grid
// over [0,1]^2 (unused second inputs are ignored).
SurrogateMse grid_mse(const SurrogateSet& set, int agent, const FixedAgentSpec& truth, int points = 32);

// A seat filled by surrogates.
class SurrogateAgent : public Agent {
 public:
  SurrogateAgent(const SurrogateSet& set, int agent) : set_(set), agent_(agent) {}
  Var act(Tape& tape, Var recipient_score, Var own_score) override;
  Var signal(Tape& tape, Var donor_action, Var own_score) override;

 private:
  const SurrogateSet& set_;
  int agent_;
};

// Agents for seats 1..N-1 backed by `set`.
std::vector<SurrogateAgent> surrogate_seats(const SurrogateSet& set, int n_agents);
std::vector<Agent*> agent_ptrs(std::vector<SurrogateAgent>& seats);

// Real-environment episodes with the learner replaced by a uniform random
// action policy (and random signals when its signal net is trainable),
// followed by `pretrain_steps` fitting steps and a freeze.
void explore_pretrain(std::span<Agent* const> real_others, const Learner& learner, const GameConfig& config,
                      int episodes, int pretrain_steps, ObsBuffer& buffer, SurrogateSet& set, Rng& rng);

// One policy step on replayed episodes with every opponent seat evaluated by
// its surrogate. Throws std::logic_error when the set is not frozen.
BatchGradient virtual_replay_update(Learner& learner, const SurrogateSet& set, const GameConfig& config,
                                    std::span<const EpisodeSeed> replay);

// Surrogate-environment payoff minus real-environment payoff on the same
// episodes.
double virtual_optimism_gap(const Learner& learner, const SurrogateSet& set, std::span<Agent* const> real_others,
                            const GameConfig& config, std::span<const EpisodeSeed> seeds);

}  // namespace rg
