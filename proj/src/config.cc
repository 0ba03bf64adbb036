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

#include "rg/config.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

namespace {

bool parse_bool(const std::string& s) {
  const std::string v = lower(trim(s));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const std::string& item : split(s, ',')) out.push_back(parse_int(item));
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

bool is_conditional_cooperator(const FixedAgentSpec& s) { return s.kind != FixedKind::kAllDefector; }

}  // namespace

std::pair<int, int> pool_counts(int n_agents, double p) {
  if (n_agents < 3) throw std::invalid_argument("pool: need at least 3 agents");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("pool: p must lie in (0, 1)");
  int coop = static_cast<int>(std::lround(p * (n_agents - 1)));
  coop = std::clamp(coop, 1, n_agents - 2);
  return {coop, n_agents - 1 - coop};
}

std::string to_string(Access a) { return a == Access::kOracle ? "oracle" : "observational"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::kReciprocity: return "rg";
    case Method::kDpg: return "dpg";
    case Method::kDdpg: return "ddpg";
    case Method::kTd3: return "td3";
  }
  return "?";
}

std::string to_string(GameKind k) { return k == GameKind::kDonation ? "donation" : "pd"; }

std::vector<FixedAgentSpec> ExperimentSpec::seated_opponents() const {
  if (!pool) return opponents;
  const auto [coop, def] = pool_counts(game.n_agents, pool->p);
  std::vector<FixedAgentSpec> out(static_cast<std::size_t>(coop), pool->cooperator);
  out.insert(out.end(), static_cast<std::size_t>(def), pool->defector);
  return out;
}

double ExperimentSpec::reference_payoff() const {
  if (reference) return *reference;
  if (kind == GameKind::kPrisonersDilemma) return pd.reward;
  const double surplus = game.benefit - game.cost;
  for (const FixedAgentSpec& s : seated_opponents()) {
    if (!is_conditional_cooperator(s)) return surplus / 4.0;
  }
  return surplus / 2.0;
}

void ExperimentSpec::validate() const {
  game.validate();
  protocol.validate();
  learner.validate();
  if (kind == GameKind::kPrisonersDilemma) {
    pd.validate();
    if (access != Access::kOracle || method != Method::kReciprocity) {
      throw std::invalid_argument("spec: the prisoner's dilemma runs only with oracle reciprocity training");
    }
  }
  if (!learner.train_action && !learner.train_signal) throw std::invalid_argument("spec: nothing to train");
  const std::vector<FixedAgentSpec> opp = seated_opponents();
  if (static_cast<int>(opp.size()) != game.n_agents - 1) {
    throw std::invalid_argument("spec: " + std::to_string(opp.size()) + " opponents for " +
                                std::to_string(game.n_agents) + " agents");
  }
  for (const FixedAgentSpec& s : opp) s.validate();
  if (access == Access::kObservational && method != Method::kReciprocity) {
    throw std::invalid_argument("spec: observational access requires method = rg");
  }
  if (access == Access::kObservational) {
    const SurrogateOptions& so = oppmodel.surrogate;
    if (so.action_arity < 1 || so.action_arity > 2 || so.signal_arity < 1 || so.signal_arity > 2) {
      throw std::invalid_argument("spec: surrogate arities must be 1 or 2");
    }
    if (oppmodel.window < 1) throw std::invalid_argument("spec: oppmodel.window must be >= 1");
    if (oppmodel.fit_steps < 0 || oppmodel.pretrain_steps < 0 || oppmodel.explore_episodes < 0) {
      throw std::invalid_argument("spec: oppmodel step counts must be >= 0");
    }
    if (!oppmodel.online && oppmodel.explore_episodes == 0) {
      throw std::invalid_argument("spec: frozen surrogates need explore episodes to be fitted");
    }
  }
  if (eval_episodes < 1 || final_eval_episodes < 1) throw std::invalid_argument("spec: eval episode counts must be >= 1");
}

void apply_spec_key(ExperimentSpec& s, const std::string& key, const std::string& value) {
  if (key.rfind("fast.", 0) == 0) {
    s.fast_overrides.emplace_back(key.substr(5), value);
    return;
  }
  if (apply_game_key(s.game, key, value)) return;
  if (apply_protocol_key(s.protocol, key, value)) return;
  if (apply_pd_key(s.pd, key, value)) return;
  const std::string v = trim(value);
  SurrogateOptions& so = s.oppmodel.surrogate;
  BaselineOptions& bo = s.baseline;
  if (key == "setting") s.setting = v;
  else if (key == "kind") {
    if (v == "donation") s.kind = GameKind::kDonation;
    else if (v == "pd") s.kind = GameKind::kPrisonersDilemma;
    else throw std::invalid_argument("kind must be donation or pd");
  } else if (key == "opponents") {
    s.opponents = parse_fixed_agents(v);
    s.pool.reset();
  } else if (key == "pool.cooperator" || key == "pool.defector" || key == "pool.p") {
    if (!s.pool) s.pool = PoolSpec{parse_fixed_agent("HybridCoop(L3)"), parse_fixed_agent("AllD(L3)"), 0.5};
    if (key == "pool.cooperator") s.pool->cooperator = parse_fixed_agent(v);
    else if (key == "pool.defector") s.pool->defector = parse_fixed_agent(v);
    else s.pool->p = parse_real(v);
  } else if (key == "learner.train") {
    if (v == "action") s.learner.train_action = true, s.learner.train_signal = false;
    else if (v == "signal") s.learner.train_action = false, s.learner.train_signal = true;
    else if (v == "both") s.learner.train_action = true, s.learner.train_signal = true;
    else throw std::invalid_argument("learner.train must be action, signal or both");
  } else if (key == "learner.action_hidden") s.learner.action_hidden = parse_int_list(v);
  else if (key == "learner.signal_hidden") s.learner.signal_hidden = parse_int_list(v);
  else if (key == "learner.action_arity") s.learner.action_arity = parse_int(v);
  else if (key == "learner.signal_arity") s.learner.signal_arity = parse_int(v);
  else if (key == "learner.fixed_rule") s.learner.fixed_rule = parse_fixed_agent(v);
  else if (key == "access") {
    if (v == "oracle") s.access = Access::kOracle;
    else if (v == "observational") s.access = Access::kObservational;
    else throw std::invalid_argument("access must be oracle or observational");
  } else if (key == "method") {
    if (v == "rg") s.method = Method::kReciprocity;
    else if (v == "dpg") s.method = Method::kDpg, bo.method = BaselineMethod::kDpg;
    else if (v == "ddpg") s.method = Method::kDdpg, bo.method = BaselineMethod::kDdpg;
    else if (v == "td3") s.method = Method::kTd3, bo.method = BaselineMethod::kTd3;
    else throw std::invalid_argument("method must be rg, dpg, ddpg or td3");
  } else if (key == "surrogate.mode") {
    if (v == "per_opponent") so.mode = SurrogateOptions::Mode::kPerOpponent;
    else if (v == "shared") so.mode = SurrogateOptions::Mode::kShared;
    else throw std::invalid_argument("surrogate.mode must be per_opponent or shared");
  } else if (key == "surrogate.hidden") so.hidden = parse_int_list(v);
  else if (key == "surrogate.embed_dim") so.embed_dim = parse_int(v);
  else if (key == "surrogate.action_arity") so.action_arity = parse_int(v);
  else if (key == "surrogate.signal_arity") so.signal_arity = parse_int(v);
  else if (key == "surrogate.center_inputs") so.center_inputs = parse_bool(v);
  else if (key == "surrogate.minibatch") so.minibatch = parse_int(v);
  else if (key == "surrogate.epoch_steps") so.epoch_steps = parse_bool(v);
  else if (key == "surrogate.lr") so.lr = parse_real(v);
  else if (key == "surrogate.lr_final") so.lr_final = parse_real(v);
  else if (key == "oppmodel.window") s.oppmodel.window = parse_int(v);
  else if (key == "oppmodel.fit_steps") s.oppmodel.fit_steps = parse_int(v);
  else if (key == "oppmodel.refit") {
    if (v == "online") s.oppmodel.online = true;
    else if (v == "frozen") s.oppmodel.online = false;
    else throw std::invalid_argument("oppmodel.refit must be online or frozen");
  } else if (key == "oppmodel.explore_episodes") s.oppmodel.explore_episodes = parse_int(v);
  else if (key == "oppmodel.pretrain_steps") s.oppmodel.pretrain_steps = parse_int(v);
  else if (key == "baseline.critic_hidden") bo.critic_hidden = parse_int_list(v);
  else if (key == "baseline.critic_lr") bo.critic_lr = parse_real(v);
  else if (key == "baseline.gamma") bo.gamma = parse_real(v);
  else if (key == "baseline.tau") bo.tau = parse_real(v);
  else if (key == "baseline.rollout_noise") bo.rollout_noise = parse_real(v);
  else if (key == "baseline.target_noise") bo.target_noise = parse_real(v);
  else if (key == "baseline.target_clip") bo.target_clip = parse_real(v);
  else if (key == "baseline.policy_delay") bo.policy_delay = parse_int(v);
  else if (key == "baseline.grad_steps") bo.grad_steps = parse_int(v);
  else if (key == "baseline.batch") bo.batch = parse_int(v);
  else if (key == "baseline.capacity") bo.capacity = static_cast<std::size_t>(parse_int(v));
  else if (key == "baseline.lr2_kappa") bo.lr2_kappa = parse_real(v);
  else if (key == "baseline.lr2_alpha") bo.lr2_alpha = parse_real(v);
  else if (key == "eval.episodes") s.eval_episodes = parse_int(v);
  else if (key == "eval.final_episodes") s.final_eval_episodes = parse_int(v);
  else if (key == "best_checkpoint") s.best_checkpoint = parse_bool(v);
  else if (key == "reference") s.reference = parse_real(v);
  else throw std::invalid_argument("unknown key: " + key);
}

ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec s;
  for (const auto& [k, v] : parse_key_values(text)) {
    try {
      apply_spec_key(s, k, v);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(k + ": " + e.what());
    }
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) { return parse_spec(read_file(path)); }

ExperimentSpec with_fast(const ExperimentSpec& spec) {
  ExperimentSpec out = spec;
  out.fast_overrides.clear();
  for (const auto& [k, v] : spec.fast_overrides) apply_spec_key(out, k, v);
  return out;
}

std::string to_text(const ExperimentSpec& s) {
  std::ostringstream os;
  os << "setting = " << s.setting << "\n"
     << "kind = " << to_string(s.kind) << "\n"
     << to_text(s.game);
  if (s.kind == GameKind::kPrisonersDilemma) {
    os << "pd.reward = " << format_real(s.pd.reward) << "\n"
       << "pd.temptation = " << format_real(s.pd.temptation) << "\n"
       << "pd.punishment = " << format_real(s.pd.punishment) << "\n"
       << "pd.sucker = " << format_real(s.pd.sucker) << "\n"
       << "pd.tau = " << format_real(s.pd.tau) << "\n";
  }
  if (s.pool) {
    os << "pool.cooperator = " << to_string(s.pool->cooperator) << "\n"
       << "pool.defector = " << to_string(s.pool->defector) << "\n"
       << "pool.p = " << format_real(s.pool->p) << "\n";
  } else {
    os << "opponents = ";
    for (std::size_t k = 0; k < s.opponents.size(); ++k) os << (k ? ", " : "") << to_string(s.opponents[k]);
    os << "\n";
  }
  const LearnerSpec& l = s.learner;
  os << "learner.train = " << (l.train_action && l.train_signal ? "both" : l.train_action ? "action" : "signal") << "\n"
     << "learner.action_hidden = " << join(l.action_hidden) << "\n"
     << "learner.signal_hidden = " << join(l.signal_hidden) << "\n"
     << "learner.action_arity = " << l.action_arity << "\n"
     << "learner.signal_arity = " << l.signal_arity << "\n"
     << "learner.fixed_rule = " << to_string(l.fixed_rule) << "\n"
     << to_text(s.protocol)
     << "access = " << to_string(s.access) << "\n"
     << "method = " << to_string(s.method) << "\n";
  const SurrogateOptions& so = s.oppmodel.surrogate;
  os << "surrogate.mode = " << (so.mode == SurrogateOptions::Mode::kShared ? "shared" : "per_opponent") << "\n"
     << "surrogate.hidden = " << join(so.hidden) << "\n"
     << "surrogate.embed_dim = " << so.embed_dim << "\n"
     << "surrogate.action_arity = " << so.action_arity << "\n"
     << "surrogate.signal_arity = " << so.signal_arity << "\n"
     << "surrogate.center_inputs = " << (so.center_inputs ? "true" : "false") << "\n"
     << "surrogate.minibatch = " << so.minibatch << "\n"
     << "surrogate.epoch_steps = " << (so.epoch_steps ? "true" : "false") << "\n"
     << "surrogate.lr = " << format_real(so.lr) << "\n"
     << "surrogate.lr_final = " << format_real(so.lr_final) << "\n"
     << "oppmodel.window = " << s.oppmodel.window << "\n"
     << "oppmodel.fit_steps = " << s.oppmodel.fit_steps << "\n"
     << "oppmodel.refit = " << (s.oppmodel.online ? "online" : "frozen") << "\n"
     << "oppmodel.explore_episodes = " << s.oppmodel.explore_episodes << "\n"
     << "oppmodel.pretrain_steps = " << s.oppmodel.pretrain_steps << "\n";
  const BaselineOptions& b = s.baseline;
  os << "baseline.critic_hidden = " << join(b.critic_hidden) << "\n"
     << "baseline.critic_lr = " << format_real(b.critic_lr) << "\n"
     << "baseline.gamma = " << format_real(b.gamma) << "\n"
     << "baseline.tau = " << format_real(b.tau) << "\n"
     << "baseline.rollout_noise = " << format_real(b.rollout_noise) << "\n"
     << "baseline.target_noise = " << format_real(b.target_noise) << "\n"
     << "baseline.target_clip = " << format_real(b.target_clip) << "\n"
     << "baseline.policy_delay = " << b.policy_delay << "\n"
     << "baseline.grad_steps = " << b.grad_steps << "\n"
     << "baseline.batch = " << b.batch << "\n"
     << "baseline.capacity = " << b.capacity << "\n"
     << "baseline.lr2_kappa = " << format_real(b.lr2_kappa) << "\n"
     << "baseline.lr2_alpha = " << format_real(b.lr2_alpha) << "\n"
     << "eval.episodes = " << s.eval_episodes << "\n"
     << "eval.final_episodes = " << s.final_eval_episodes << "\n"
     << "best_checkpoint = " << (s.best_checkpoint ? "true" : "false") << "\n";
  if (s.reference) os << "reference = " << format_real(*s.reference) << "\n";
  for (const auto& [k, v] : s.fast_overrides) os << "fast." << k << " = " << v << "\n";
  return os.str();
}

}  // namespace rg
