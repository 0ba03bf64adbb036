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

#include "rg/pdgame.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

void PDConfig::validate() const {
  if (!(temptation > reward && reward > punishment && punishment > sucker)) {
    throw std::invalid_argument("PDConfig: payoffs must satisfy T > R > P > S");
  }
  if (!(2.0 * reward > temptation + sucker)) throw std::invalid_argument("PDConfig: payoffs must satisfy 2R > T + S");
  if (!(tau > 0.0)) throw std::invalid_argument("PDConfig: tau must be positive");
}

bool apply_pd_key(PDConfig& pd, const std::string& key, const std::string& value) {
  if (key == "pd.reward") pd.reward = parse_real(value);
  else if (key == "pd.temptation") pd.temptation = parse_real(value);
  else if (key == "pd.punishment") pd.punishment = parse_real(value);
  else if (key == "pd.sucker") pd.sucker = parse_real(value);
  else if (key == "pd.tau") pd.tau = parse_real(value);
  else return false;
  return true;
}

double pd_payoff(const PDConfig& pd, double x, double y) {
  return x * y * pd.reward + x * (1.0 - y) * pd.sucker + (1.0 - x) * y * pd.temptation +
         (1.0 - x) * (1.0 - y) * pd.punishment;
}

Var pd_payoff(const PDConfig& pd, Var x, Var y) {
  const double xv = x.value();
  const double yv = y.value();
  const double dx = yv * pd.reward + (1.0 - yv) * pd.sucker - yv * pd.temptation - (1.0 - yv) * pd.punishment;
  const double dy = xv * pd.reward - xv * pd.sucker + (1.0 - xv) * pd.temptation - (1.0 - xv) * pd.punishment;
  return x.tape->push(pd_payoff(pd, xv, yv), {{x, dx}, {y, dy}});
}

namespace {

// Cooperation probability to logit, kept finite for deterministic rules.
Var to_logit(Var p) {
  constexpr double kEps = 1e-6;
  const double v = std::clamp(p.value(), kEps, 1.0 - kEps);
  const double d = (p.value() > kEps && p.value() < 1.0 - kEps) ? 1.0 / (v * (1.0 - v)) : 0.0;
  return p.tape->push(std::log(v / (1.0 - v)), {{p, d}});
}

}  // namespace

PDRound pd_round(Agent& i, Agent& j, Var score_i, Var score_j, const PDConfig& pd, Rng& rng, Tape& tape,
                 bool hard) {
  PDRound r;
  const Var pi = i.act(tape, score_j, score_i);
  const Var pj = j.act(tape, score_i, score_j);
  r.action_i = gumbel_sigmoid(to_logit(pi), pd.tau, rng, hard);
  r.action_j = gumbel_sigmoid(to_logit(pj), pd.tau, rng, hard);
  r.payoff_i = pd_payoff(pd, r.action_i, r.action_j);
  r.payoff_j = pd_payoff(pd, r.action_j, r.action_i);
  r.signal_about_j = i.signal(tape, r.action_j, score_i);
  r.signal_about_i = j.signal(tape, r.action_i, score_j);
  return r;
}

PDEpisodeResult play_pd_episode(std::span<Agent* const> agents, const GameConfig& game, const PDConfig& pd,
                                const EpisodeSeed& seed, Rng& rng, Tape& tape, bool hard) {
  const int n = static_cast<int>(agents.size());
  if (n != game.n_agents) throw std::invalid_argument("play_pd_episode: agent count does not match config");
  if (static_cast<int>(seed.init.size()) != n) throw std::invalid_argument("play_pd_episode: bad initial scores");
  validate_matching(seed.matching, n);
  std::vector<Ledger> ledgers;
  ledgers.reserve(n);
  for (int k = 0; k < n; ++k) ledgers.emplace_back(&tape, game.aggregator, seed.init[k]);
  PDEpisodeResult res;
  res.discounted_return = tape.constant(0.0);
  double disc = 1.0;
  int t = 0;
  for (const auto& [i, j] : seed.matching) {
    const Var si = ledgers[i].score();
    const Var sj = ledgers[j].score();
    const PDRound r = pd_round(*agents[i], *agents[j], si, sj, pd, rng, tape, hard);
    if (i == 0 || j == 0) {
      const Var mine = (i == 0) ? r.payoff_i : r.payoff_j;
      res.payoff += mine.value();
      ++res.rounds;
      res.discounted_return = res.discounted_return + mine * disc;
    }
    ledgers[i].append(r.signal_about_i, j, t);
    ledgers[j].append(r.signal_about_j, i, t);
    disc *= game.discount;
    ++t;
  }
  return res;
}

BatchGradient pd_batch_gradient(const Learner& learner, std::span<Agent* const> others, const GameConfig& game,
                                const PDConfig& pd, std::span<const EpisodeSeed> batch, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("pd_batch_gradient: empty batch");
  BatchGradient g;
  if (learner.spec().train_action) g.action.assign(learner.action_net().param_count(), 0.0);
  if (learner.spec().train_signal) g.signal.assign(learner.signal_net().param_count(), 0.0);
  thread_local Tape tape(true);
  int counted = 0;
  for (const EpisodeSeed& seed : batch) {
    tape.clear();
    LearnerAgent me(learner, tape, true);
    const std::vector<Agent*> seats = seat_agents(&me, others);
    const PDEpisodeResult res = play_pd_episode(seats, game, pd, seed, rng, tape, false);
    g.mean_return += res.discounted_return.value();
    if (res.rounds > 0) {
      g.mean_payoff += res.per_round();
      ++counted;
    }
    if (!res.discounted_return.requires_grad()) continue;
    const std::vector<double> adj = tape.adjoints(res.discounted_return);
    auto gather = [&adj](const std::vector<BoundBlock>& blocks, std::vector<double>& out) {
      std::size_t k = 0;
      for (const BoundBlock& b : blocks) {
        for (int e = 0; e < b.size(); ++e) out[k++] += adj[b.first + e];
      }
    };
    if (!g.action.empty()) gather(me.action_blocks(), g.action);
    if (!g.signal.empty()) gather(me.signal_blocks(), g.signal);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  double na = 0.0, ns = 0.0;
  for (double& x : g.action) {
    x *= inv;
    na += x * x;
  }
  for (double& x : g.signal) {
    x *= inv;
    ns += x * x;
  }
  g.norm_action = std::sqrt(na);
  g.norm_signal = std::sqrt(ns);
  g.mean_return *= inv;
  if (counted > 0) g.mean_payoff /= counted;
  return g;
}

double pd_evaluate(const Learner& learner, std::span<Agent* const> others, const GameConfig& game,
                   const PDConfig& pd, int episodes, Rng& rng) {
  Tape tape(false);
  double sum = 0.0;
  int counted = 0;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeSeed seed = draw_episode_seed(game, rng);
    tape.clear();
    LearnerAgent me(learner, tape, false);
    const std::vector<Agent*> seats = seat_agents(&me, others);
    const PDEpisodeResult res = play_pd_episode(seats, game, pd, seed, rng, tape, true);
    if (res.rounds == 0) continue;
    sum += res.per_round();
    ++counted;
  }
  return counted > 0 ? sum / counted : 0.0;
}

}  // namespace rg
