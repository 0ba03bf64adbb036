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

#include "rg/game.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rg/opponents.h"
#include "rg/strings.h"

namespace rg {

void GameConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("game: n_agents must be >= 2");
  if (!(benefit > 1.0)) throw std::invalid_argument("game: benefit must exceed 1");
  if (!(cost > 0.0 && cost < benefit)) throw std::invalid_argument("game: cost must lie in (0, benefit)");
  if (round_robins_min < 1 || round_robins_max < round_robins_min) {
    throw std::invalid_argument("game: invalid round_robins range");
  }
  if (aggregator.kind == AggregatorSpec::Kind::kEma && !(aggregator.lambda > 0.0 && aggregator.lambda < 1.0)) {
    throw std::invalid_argument("game: ema lambda must lie in (0, 1)");
  }
  if (aggregator.window < 0) throw std::invalid_argument("game: window must be >= 0");
  if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("game: discount must lie in (0, 1]");
  if (init.kind == ReputationInit::Kind::kWarmup && !init.norm) {
    throw std::invalid_argument("game: warmup init requires a norm");
  }
  if (init.kind == ReputationInit::Kind::kConstant && !(init.value >= 0.0 && init.value <= 1.0)) {
    throw std::invalid_argument("game: constant init must lie in [0, 1]");
  }
}

std::string to_string(NormId id) {
  switch (id) {
    case NormId::kL3: return "L3";
    case NormId::kL6: return "L6";
    case NormId::kIdentity: return "identity";
  }
  return "?";
}

NormId parse_norm(const std::string& s) {
  const std::string t = lower(trim(s));
  if (t == "l3") return NormId::kL3;
  if (t == "l6") return NormId::kL6;
  if (t == "identity") return NormId::kIdentity;
  throw std::invalid_argument("unknown norm: " + s);
}

std::string to_string(const AggregatorSpec& agg) {
  if (agg.kind == AggregatorSpec::Kind::kMean) return "mean";
  return "ema:" + format_real(agg.lambda);
}

AggregatorSpec parse_aggregator(const std::string& s) {
  AggregatorSpec agg;
  const std::string t = lower(trim(s));
  if (t == "mean") return agg;
  if (t.rfind("ema", 0) == 0) {
    agg.kind = AggregatorSpec::Kind::kEma;
    const auto colon = t.find(':');
    if (colon != std::string::npos) agg.lambda = parse_real(t.substr(colon + 1));
    return agg;
  }
  throw std::invalid_argument("unknown aggregator: " + s);
}

std::string to_string(const ReputationInit& init) {
  switch (init.kind) {
    case ReputationInit::Kind::kConstant: return "const:" + format_real(init.value);
    case ReputationInit::Kind::kUniform: return "uniform";
    case ReputationInit::Kind::kWarmup: return "warmup:" + to_string(*init.norm);
  }
  return "?";
}

ReputationInit parse_init(const std::string& s) {
  ReputationInit init;
  const std::string t = lower(trim(s));
  const auto colon = t.find(':');
  const std::string head = t.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : t.substr(colon + 1);
  if (head == "const" || head == "constant") {
    init.kind = ReputationInit::Kind::kConstant;
    if (!arg.empty()) init.value = parse_real(arg);
  } else if (head == "uniform") {
    init.kind = ReputationInit::Kind::kUniform;
  } else if (head == "warmup") {
    init.kind = ReputationInit::Kind::kWarmup;
    if (!arg.empty()) init.norm = parse_norm(arg);
  } else {
    throw std::invalid_argument("unknown reputation init: " + s);
  }
  return init;
}

bool apply_game_key(GameConfig& c, const std::string& key, const std::string& value) {
  if (key == "n_agents") c.n_agents = parse_int(value);
  else if (key == "benefit") c.benefit = parse_real(value);
  else if (key == "cost") c.cost = parse_real(value);
  else if (key == "matching") {
    const std::string v = lower(value);
    if (v == "direct") c.regime = MatchingRegime::kDirect;
    else if (v == "indirect") c.regime = MatchingRegime::kIndirect;
    else throw std::invalid_argument("matching must be direct or indirect");
  } else if (key == "round_robins") {
    const auto parts = split(value, ',');
    c.round_robins_min = parse_int(parts.at(0));
    c.round_robins_max = parts.size() > 1 ? parse_int(parts[1]) : c.round_robins_min;
  } else if (key == "aggregator") c.aggregator = [&] {
    AggregatorSpec a = parse_aggregator(value);
    a.window = c.aggregator.window;
    return a;
  }();
  else if (key == "window") c.aggregator.window = parse_int(value);
  else if (key == "init") c.init = parse_init(value);
  else if (key == "gossip") {
    const std::string v = lower(value);
    if (v == "first") c.gossip = GossipOrder::kFirst;
    else if (v == "second") c.gossip = GossipOrder::kSecond;
    else throw std::invalid_argument("gossip must be first or second");
  } else if (key == "discount") c.discount = parse_real(value);
  else return false;
  return true;
}

std::string to_text(const GameConfig& c) {
  std::ostringstream os;
  os << "n_agents = " << c.n_agents << "\n"
     << "benefit = " << format_real(c.benefit) << "\n"
     << "cost = " << format_real(c.cost) << "\n"
     << "matching = " << (c.regime == MatchingRegime::kDirect ? "direct" : "indirect") << "\n"
     << "round_robins = " << c.round_robins_min << "," << c.round_robins_max << "\n"
     << "aggregator = " << to_string(c.aggregator) << "\n"
     << "window = " << c.aggregator.window << "\n"
     << "init = " << to_string(c.init) << "\n"
     << "gossip = " << (c.gossip == GossipOrder::kFirst ? "first" : "second") << "\n"
     << "discount = " << format_real(c.discount) << "\n";
  return os.str();
}

GameConfig parse_game_config(const std::string& text) {
  GameConfig c;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (!apply_game_key(c, key, value)) throw std::invalid_argument("unknown game key: " + key);
  }
  c.validate();
  return c;
}

MatchingSequence draw_matching(const GameConfig& config, Rng& rng) {
  if (config.n_agents < 2) throw std::invalid_argument("draw_matching: n_agents must be >= 2");
  const int n = config.n_agents;
  MatchingSequence pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) pairs.emplace_back(i, j);
    }
  }
  const int rounds = config.regime == MatchingRegime::kIndirect
                         ? 1
                         : uniform_int(rng, config.round_robins_min, config.round_robins_max);
  MatchingSequence out;
  out.reserve(pairs.size() * rounds);
  for (int r = 0; r < rounds; ++r) {
    std::shuffle(pairs.begin(), pairs.end(), rng);
    out.insert(out.end(), pairs.begin(), pairs.end());
  }
  return out;
}

void validate_matching(const MatchingSequence& m, int n_agents) {
  for (const auto& [d, r] : m) {
    if (d < 0 || r < 0 || d >= n_agents || r >= n_agents) throw std::invalid_argument("matching: agent id out of range");
    if (d == r) throw std::invalid_argument("matching: donor equals recipient");
  }
}

std::vector<double> init_reputation(const GameConfig& config, Rng& rng) {
  std::vector<double> out(config.n_agents);
  switch (config.init.kind) {
    case ReputationInit::Kind::kConstant:
      std::fill(out.begin(), out.end(), config.init.value);
      break;
    case ReputationInit::Kind::kUniform:
      for (double& x : out) x = uniform01(rng);
      break;
    case ReputationInit::Kind::kWarmup: {
      if (!config.init.norm) throw std::invalid_argument("init_reputation: warmup requires a norm");
      const std::vector<double>& pool = stationary_distribution(*config.init.norm);
      for (double& x : out) x = pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)];
      break;
    }
  }
  return out;
}

Ledger::Ledger(Tape* tape, AggregatorSpec agg, double initial) : tape_(tape), agg_(agg) {
  score_ = tape_->constant(initial);
}

void Ledger::append(Var signal, int author, int step) {
  entries_.push_back({signal, author, step});
  const int m = static_cast<int>(entries_.size());
  if (agg_.window > 0) {
    const int k = std::min(agg_.window, m);
    thread_local std::vector<Var> tail;
    thread_local std::vector<double> w;
    tail.clear();
    w.clear();
    for (int l = m - k; l < m; ++l) tail.push_back(entries_[l].signal);
    if (agg_.kind == AggregatorSpec::Kind::kMean) {
      w.assign(k, 1.0 / k);
    } else {
      for (int l = 0; l < k; ++l) w.push_back((1.0 - agg_.lambda) * std::pow(agg_.lambda, k - 1 - l));
    }
    score_ = weighted_sum(*tape_, tail, w);
    return;
  }
  if (agg_.kind == AggregatorSpec::Kind::kMean) {
    running_ = (m == 1) ? signal : running_ + signal;
    score_ = running_ * (1.0 / m);
  } else {
    const double lam = agg_.lambda;
    if (m == 1) {
      running_ = signal * (1.0 - lam);
    } else {
      const Var parts[2] = {running_, signal};
      const double w[2] = {lam, 1.0 - lam};
      running_ = weighted_sum(*tape_, parts, w);
    }
    score_ = running_;
  }
}

Var aggregate(Tape& tape, std::span<const Var> signals, const AggregatorSpec& agg, double initial) {
  if (signals.empty()) return tape.constant(initial);
  std::span<const Var> s = signals;
  if (agg.window > 0 && static_cast<int>(s.size()) > agg.window) s = s.subspan(s.size() - agg.window);
  const int m = static_cast<int>(s.size());
  std::vector<double> w(m);
  for (int l = 0; l < m; ++l) {
    w[l] = agg.kind == AggregatorSpec::Kind::kMean ? 1.0 / m
                                                   : (1.0 - agg.lambda) * std::pow(agg.lambda, m - 1 - l);
  }
  return weighted_sum(tape, s, w);
}

namespace {

void check_unit(double v, const char* what, int agent, int step) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << what << " of agent " << agent << " at step " << step << " is outside [0,1]: " << v;
    throw std::domain_error(os.str());
  }
}

}  // namespace

EpisodeResult play_episode(std::span<Agent* const> agents, const GameConfig& config,
                           const MatchingSequence& matching, std::span<const double> initial_scores,
                           Tape& tape, const EpisodeOptions& options) {
  const int n = config.n_agents;
  if (static_cast<int>(agents.size()) != n) throw std::invalid_argument("play_episode: agent count mismatch");
  if (static_cast<int>(initial_scores.size()) != n) throw std::invalid_argument("play_episode: init size mismatch");
  validate_matching(matching, n);

  std::vector<Ledger> ledgers;
  ledgers.reserve(n);
  for (int i = 0; i < n; ++i) ledgers.emplace_back(&tape, config.aggregator, initial_scores[i]);

  std::vector<char> tracked(n, options.tracked.empty() ? 1 : 0);
  for (int k : options.tracked) tracked.at(k) = 1;
  std::vector<std::vector<Var>> terms(n);
  std::vector<std::vector<double>> weights(n);

  EpisodeResult res;
  res.reward.assign(n, 0.0);
  res.interactions.assign(n, 0);
  if (options.record_log) res.log.reserve(matching.size());

  double disc = 1.0;
  for (int t = 0; t < static_cast<int>(matching.size()); ++t) {
    const auto [i, j] = matching[t];
    const Var si = ledgers[i].score();
    const Var sj = ledgers[j].score();

    Var a;
    if (i == options.random_agent) {
      a = tape.constant(uniform01(*options.noise_rng));
    } else {
      a = agents[i]->act(tape, sj, si);
      check_unit(a.value(), "action", i, t);
      if (i == options.noisy_agent && options.action_noise > 0.0) {
        const double noisy = std::clamp(a.value() + normal(*options.noise_rng, 0.0, options.action_noise), 0.0, 1.0);
        a = tape.constant(noisy);
      }
    }
    Var sigma;
    if (j == options.random_agent && options.random_signal) {
      sigma = tape.constant(uniform01(*options.noise_rng));
    } else {
      sigma = agents[j]->signal(tape, a, sj);
      check_unit(sigma.value(), "signal", j, t);
    }
    ledgers[i].append(sigma, j, t);

    const double av = a.value();
    res.reward[i] -= config.cost * av;
    res.reward[j] += config.benefit * av;
    res.interactions[i] += 1;
    res.interactions[j] += 1;
    if (tracked[i]) {
      terms[i].push_back(a);
      weights[i].push_back(-config.cost * disc);
    }
    if (tracked[j]) {
      terms[j].push_back(a);
      weights[j].push_back(config.benefit * disc);
    }
    if (options.record_log) {
      res.log.push_back({t, i, j, av, sj.value(), si.value(), sigma.value()});
    }
    disc *= config.discount;
  }

  res.discounted_return.resize(n);
  for (int k = 0; k < n; ++k) {
    if (tracked[k]) res.discounted_return[k] = weighted_sum(tape, terms[k], weights[k]);
  }
  res.ledgers.resize(n);
  res.final_scores.resize(n);
  for (int k = 0; k < n; ++k) {
    res.ledgers[k] = ledgers[k].entries();
    res.final_scores[k] = ledgers[k].score().value();
  }
  return res;
}

double per_interaction_payoff(const EpisodeResult& result, int agent) {
  const int count = result.interactions.at(agent);
  if (count == 0) throw std::invalid_argument("per_interaction_payoff: agent had no interactions");
  return result.reward[agent] / count;
}

void write_episode_csv(std::ostream& os, const std::vector<InteractionRecord>& log) {
  os << "step,donor,recipient,action,signal,donor_score_before,recipient_score_before\n";
  for (const auto& r : log) {
    os << r.step << ',' << r.donor << ',' << r.recipient << ',' << format_real(r.donor_action) << ','
       << format_real(r.signal) << ',' << format_real(r.donor_score) << ',' << format_real(r.recipient_score) << '\n';
  }
}

std::vector<InteractionRecord> read_episode_csv(std::istream& is) {
  std::vector<InteractionRecord> out;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw std::invalid_argument("episode csv: expected 7 columns");
    InteractionRecord r;
    r.step = parse_int(f[0]);
    r.donor = parse_int(f[1]);
    r.recipient = parse_int(f[2]);
    r.donor_action = parse_real(f[3]);
    r.signal = parse_real(f[4]);
    r.donor_score = parse_real(f[5]);
    r.recipient_score = parse_real(f[6]);
    out.push_back(r);
  }
  return out;
}

}  // namespace rg
