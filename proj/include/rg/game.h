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

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rg/autodiff.h"

namespace rg {

enum class NormId { kL3, kL6, kIdentity };

enum class MatchingRegime { kDirect, kIndirect };
enum class GossipOrder { kFirst, kSecond };

struct AggregatorSpec {
  enum class Kind { kMean, kEma };
  Kind kind = Kind::kMean;
  double lambda = 0.5;  // ema decay
  int window = 0;       // 0 keeps the full history
};

struct ReputationInit {
  enum class Kind { kConstant, kUniform, kWarmup };
  Kind kind = Kind::kConstant;
  double value = 0.5;
  std::optional<NormId> norm;  // required for kWarmup
};

struct GameConfig {
  int n_agents = 3;
  double benefit = 10.0;
  double cost = 1.0;
  MatchingRegime regime = MatchingRegime::kDirect;
  int round_robins_min = 8;
  int round_robins_max = 9;
  AggregatorSpec aggregator;
  ReputationInit init;
  GossipOrder gossip = GossipOrder::kFirst;
  double discount = 1.0;

  // Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

// Flat `key = value` text form. Unknown keys are rejected.
std::string to_text(const GameConfig& config);
GameConfig parse_game_config(const std::string& text);
// Applies one key/value pair; returns false for keys that are not game keys.
bool apply_game_key(GameConfig& config, const std::string& key, const std::string& value);

std::string to_string(NormId id);
NormId parse_norm(const std::string& s);
std::string to_string(const AggregatorSpec& agg);
AggregatorSpec parse_aggregator(const std::string& s);
std::string to_string(const ReputationInit& init);
ReputationInit parse_init(const std::string& s);

using MatchingSequence = std::vector<std::pair<int, int>>;  // (donor, recipient)

MatchingSequence draw_matching(const GameConfig& config, Rng& rng);
// Checks donor != recipient and ids in range; throws otherwise.
void validate_matching(const MatchingSequence& m, int n_agents);

std::vector<double> init_reputation(const GameConfig& config, Rng& rng);

// One signal stored in a ledger.
struct LedgerEntry {
  Var signal;
  int author = -1;
  int step = -1;
};

// Per-agent signal history plus an incrementally maintained score.
class Ledger {
 public:
  Ledger() = default;
  Ledger(Tape* tape, AggregatorSpec agg, double initial);

  Var score() const { return score_; }
  void append(Var signal, int author, int step);
  const std::vector<LedgerEntry>& entries() const { return entries_; }

 private:
  Tape* tape_ = nullptr;
  AggregatorSpec agg_;
  std::vector<LedgerEntry> entries_;
  Var score_;
  Var running_;  // running sum (mean) or running ema
};

// Aggregate a list of signals. An empty list yields the initial reputation
// as a constant.
Var aggregate(Tape& tape, std::span<const Var> signals, const AggregatorSpec& agg, double initial);

// One publicly observable interaction.
struct InteractionRecord {
  int step = 0;
  int donor = 0;
  int recipient = 0;
  double donor_action = 0.0;
  double recipient_score = 0.0;
  double donor_score = 0.0;
  double signal = 0.0;
};

// Anything that can occupy a seat in the donation game.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual Var act(Tape& tape, Var recipient_score, Var own_score) = 0;
  virtual Var signal(Tape& tape, Var donor_action, Var own_score) = 0;
};

struct EpisodeOptions {
  // Agents whose discounted return is assembled on the tape. Empty = all.
  std::vector<int> tracked;
  bool record_log = false;
  // Gaussian noise added to (and clamped after) the actions of `noisy_agent`.
  int noisy_agent = -1;
  double action_noise = 0.0;
  Rng* noise_rng = nullptr;
  // Replace the actions / signals of `random_agent` by U[0,1] draws.
  int random_agent = -1;
  bool random_signal = false;
};

struct EpisodeResult {
  std::vector<Var> discounted_return;  // valid for tracked agents
  std::vector<double> reward;          // undiscounted cumulative reward
  std::vector<int> interactions;
  std::vector<InteractionRecord> log;
  std::vector<std::vector<LedgerEntry>> ledgers;
  std::vector<double> final_scores;
};

EpisodeResult play_episode(std::span<Agent* const> agents, const GameConfig& config,
                           const MatchingSequence& matching, std::span<const double> initial_scores,
                           Tape& tape, const EpisodeOptions& options = {});

double per_interaction_payoff(const EpisodeResult& result, int agent);

// Episode log CSV: step,donor,recipient,action,signal,donor_score_before,recipient_score_before
void write_episode_csv(std::ostream& os, const std::vector<InteractionRecord>& log);
std::vector<InteractionRecord> read_episode_csv(std::istream& is);

}  // namespace rg
