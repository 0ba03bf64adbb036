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

#include <span>
#include <string>
#include <vector>

#include "rg/game.h"
#include "rg/learner.h"

namespace rg {

// Symmetric prisoner's dilemma with reputation gossip. Actions are
// cooperation indicators drawn through a Gumbel-sigmoid relaxation of each
// agent's cooperation probability.
struct PDConfig {
  double reward = 3.0;      // R
  double temptation = 5.0;  // T
  double punishment = 1.0;  // P
  double sucker = 0.0;      // S
  double tau = 0.5;

  // Requires T > R > P > S, 2R > T + S and tau > 0.
  void validate() const;
};

bool apply_pd_key(PDConfig& pd, const std::string& key, const std::string& value);

// Payoff to a player cooperating with weight x against weight y, bilinear in
// (x, y) so that hard actions recover the matrix entries.
double pd_payoff(const PDConfig& pd, double x, double y);
Var pd_payoff(const PDConfig& pd, Var x, Var y);

struct PDRound {
  Var action_i;
  Var action_j;
  Var payoff_i;
  Var payoff_j;
  Var signal_about_i;  // emitted by j
  Var signal_about_j;  // emitted by i
};

// One simultaneous round. Each side's cooperation probability comes from
// Agent::act(partner score, own score) and is turned into a logit for the
// Gumbel-sigmoid draw; gossip comes from Agent::signal(partner action, own
// score). hard=true snaps the sampled actions to {0, 1}.
PDRound pd_round(Agent& i, Agent& j, Var score_i, Var score_j, const PDConfig& pd, Rng& rng, Tape& tape,
                 bool hard);

struct PDEpisodeResult {
  Var discounted_return;  // agent 0
  double payoff = 0.0;    // agent 0, undiscounted total
  int rounds = 0;         // rounds agent 0 played
  double per_round() const { return rounds > 0 ? payoff / rounds : 0.0; }
};

// Each matching entry (i, j) is one round between i and j. Reputation
// bookkeeping follows `game` (aggregator, discount).
PDEpisodeResult play_pd_episode(std::span<Agent* const> agents, const GameConfig& game, const PDConfig& pd,
                                const EpisodeSeed& seed, Rng& rng, Tape& tape, bool hard);

// Mean gradient of agent 0's discounted return over the batch, soft actions.
BatchGradient pd_batch_gradient(const Learner& learner, std::span<Agent* const> others, const GameConfig& game,
                                const PDConfig& pd, std::span<const EpisodeSeed> batch, Rng& rng);

// Mean per-round payoff of the learner with hard actions.
double pd_evaluate(const Learner& learner, std::span<Agent* const> others, const GameConfig& game,
                   const PDConfig& pd, int episodes, Rng& rng);

}  // namespace rg
