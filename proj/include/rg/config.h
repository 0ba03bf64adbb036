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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rg/baselines.h"
#include "rg/game.h"
#include "rg/learner.h"
#include "rg/oppmodel.h"
#include "rg/opponents.h"
#include "rg/pdgame.h"

namespace rg {

enum class GameKind { kDonation, kPrisonersDilemma };
enum class Access { kOracle, kObservational };
enum class Method { kReciprocity, kDpg, kDdpg, kTd3 };

struct OppModelConfig {
  SurrogateOptions surrogate;
  int window = 10;
  int fit_steps = 20;          // per outer iteration when refitting online
  bool online = true;          // refit every outer iteration
  int explore_episodes = 0;    // > 0 engages explore-then-freeze
  int pretrain_steps = 800;
};

// Cooperator / defector pool whose composition follows (n_agents, p).
struct PoolSpec {
  FixedAgentSpec cooperator;
  FixedAgentSpec defector;
  double p = 0.5;
};

// Opponent counts for a pool: round(p (N - 1)) cooperators clamped to
// [1, N - 2], the rest defectors.
std::pair<int, int> pool_counts(int n_agents, double p);

struct ExperimentSpec {
  std::string setting = "custom";
  GameKind kind = GameKind::kDonation;
  GameConfig game;
  PDConfig pd;
  std::vector<FixedAgentSpec> opponents;
  std::optional<PoolSpec> pool;  // overrides `opponents` when set
  LearnerSpec learner;
  TrainProtocol protocol;
  Access access = Access::kOracle;
  Method method = Method::kReciprocity;
  OppModelConfig oppmodel;
  BaselineOptions baseline;
  int eval_episodes = 64;        // per outer iteration
  int final_eval_episodes = 200;
  bool best_checkpoint = false;
  std::optional<double> reference;
  // Applied on top of everything else by with_fast().
  std::vector<std::pair<std::string, std::string>> fast_overrides;

  // Throws std::invalid_argument describing the first problem.
  void validate() const;
  // Opponents actually seated (pool expanded).
  std::vector<FixedAgentSpec> seated_opponents() const;
  // Explicit value, else R for the PD, (b - c)/2 when every opponent is a
  // conditional cooperator and (b - c)/4 when the pool contains defectors.
  double reference_payoff() const;
};

std::string to_string(Access a);
std::string to_string(Method m);
std::string to_string(GameKind k);

// Applies one key; unknown keys throw.
void apply_spec_key(ExperimentSpec& spec, const std::string& key, const std::string& value);
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::string& path);
ExperimentSpec with_fast(const ExperimentSpec& spec);
// Canonical text form; parse_spec(to_text(s)) reproduces s.
std::string to_text(const ExperimentSpec& spec);

}  // namespace rg
