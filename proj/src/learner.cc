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


#include "rg/learner.h"

#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

void TrainProtocol::validate() const {
  if (!(lr_action > 0.0) || !(lr_signal > 0.0)) throw std::invalid_argument("protocol: learning rates must be positive");
  if (n_train < 1 || t_outer < 1 || n_play < 1 || batch < 1) {
    throw std::invalid_argument("protocol: n_train, t_outer, n_play and batch must be >= 1");
  }
  if (explore_noise < 0.0) throw std::invalid_argument("protocol: explore_noise must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("protocol: no seeds");
  if (budget_reference_lr < 0.0) throw std::invalid_argument("protocol: budget_reference_lr must be >= 0");
}

int TrainProtocol::effective_outer_iters() const {
  if (budget_reference_lr <= 0.0) return t_outer;
  return std::max(1, static_cast<int>(std::lround(t_outer * budget_reference_lr / lr_action)));
}

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split(v, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash != std::string::npos && dash > 0) {
      const int lo = parse_int(item.substr(0, dash));
      const int hi = parse_int(item.substr(dash + 1));
      for (int s = lo; s <= hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
    } else {
      out.push_back(static_cast<std::uint64_t>(parse_int(item)));
    }
  }
  return out;
}

}  // namespace

bool apply_protocol_key(TrainProtocol& p, const std::string& key, const std::string& value) {
  if (key == "lr_action") p.lr_action = parse_real(value);
  else if (key == "lr_signal") p.lr_signal = parse_real(value);
  else if (key == "n_train") p.n_train = parse_int(value);
  else if (key == "t_outer") p.t_outer = parse_int(value);
  else if (key == "n_play") p.n_play = parse_int(value);
  else if (key == "batch") p.batch = parse_int(value);
  else if (key == "explore_noise") p.explore_noise = parse_real(value);
  else if (key == "seeds") p.seeds = parse_seeds(value);
  else if (key == "budget_reference_lr") p.budget_reference_lr = parse_real(value);
  else return false;
  return true;
}

std::string to_text(const TrainProtocol& p) {
  std::ostringstream os;
  os << "lr_action = " << format_real(p.lr_action) << "\n"
     << "lr_signal = " << format_real(p.lr_signal) << "\n"
     << "n_train = " << p.n_train << "\n"
     << "t_outer = " << p.t_outer << "\n"
     << "n_play = " << p.n_play << "\n"
     << "batch = " << p.batch << "\n"
     << "explore_noise = " << format_real(p.explore_noise) << "\n"
     << "seeds = ";
  for (std::size_t k = 0; k < p.seeds.size(); ++k) os << (k ? "," : "") << p.seeds[k];
  os << "\n"
     << "budget_reference_lr = " << format_real(p.budget_reference_lr) << "\n";
  return os.str();
}

void LearnerSpec::validate() const {
  if (action_arity < 1 || action_arity > 2) throw std::invalid_argument("learner: action arity must be 1 or 2");
  if (signal_arity < 1 || signal_arity > 2) throw std::invalid_argument("learner: signal arity must be 1 or 2");
  if (!train_action || !train_signal) fixed_rule.validate();
}

Learner::Learner(const LearnerSpec& spec, const TrainProtocol& protocol, Rng& init_rng)
    : spec_(spec),
      action_(spec.action_arity, spec.action_hidden),
      signal_(spec.signal_arity, spec.signal_hidden) {
  spec_.validate();
  action_.init_uniform(init_rng);
  signal_.init_uniform(init_rng);
  opt_action_ = NetOptimizer(action_, protocol.lr_action);
  opt_signal_ = NetOptimizer(signal_, protocol.lr_signal);
}

double Learner::action(double r, double own) const {
  if (!spec_.train_action) return fixed_action(spec_.fixed_rule, r, own);
  const double x[2] = {r, own};
  return action_.eval(std::span<const double>(x, spec_.action_arity));
}

double Learner::signal(double a, double own) const {
  if (!spec_.train_signal) return fixed_signal(spec_.fixed_rule, a, own);
  const double x[2] = {a, own};
  return signal_.eval(std::span<const double>(x, spec_.signal_arity));
}

double Learner::profile_std_action() const {
  std::vector<double> p(21);
  for (int k = 0; k < 21; ++k) p[k] = action(k / 20.0, 0.5);
  return sample_std(p);
}

double Learner::profile_std_signal() const {
  std::vector<double> p(21);
  for (int k = 0; k < 21; ++k) p[k] = signal(k / 20.0, 0.5);
  return sample_std(p);
}

LearnerAgent::LearnerAgent(const Learner& learner, Tape& tape, bool differentiable) : learner_(learner) {
  if (differentiable && tape.recording()) {
    if (learner.spec().train_action) action_blocks_ = learner.action_net().bind(tape);
    if (learner.spec().train_signal) signal_blocks_ = learner.signal_net().bind(tape);
  }
}

Var LearnerAgent::act(Tape& tape, Var recipient_score, Var own_score) {
  const LearnerSpec& s = learner_.spec();
  if (!s.train_action) return fixed_action(s.fixed_rule, tape, recipient_score, own_score);
  const Var x[2] = {recipient_score, own_score};
  return learner_.action_net().forward(tape, std::span<const Var>(x, s.action_arity),
                                       action_blocks_.empty() ? nullptr : &action_blocks_);
}

Var LearnerAgent::signal(Tape& tape, Var donor_action, Var own_score) {
  const LearnerSpec& s = learner_.spec();
  if (!s.train_signal) return fixed_signal(s.fixed_rule, tape, donor_action, own_score);
  const Var x[2] = {donor_action, own_score};
  return learner_.signal_net().forward(tape, std::span<const Var>(x, s.signal_arity),
                                       signal_blocks_.empty() ? nullptr : &signal_blocks_);
}

NetAgent::NetAgent(PolicyNet action, PolicyNet signal) : action_(std::move(action)), signal_(std::move(signal)) {
  if (action_.arity() > 2 || signal_.arity() > 2) throw std::invalid_argument("NetAgent: arity must be 1 or 2");
}

Var NetAgent::act(Tape& tape, Var recipient_score, Var own_score) {
  const Var x[2] = {recipient_score, own_score};
  return action_.forward(tape, std::span<const Var>(x, action_.arity()));
}

Var NetAgent::signal(Tape& tape, Var donor_action, Var own_score) {
  const Var x[2] = {donor_action, own_score};
  return signal_.forward(tape, std::span<const Var>(x, signal_.arity()));
}

EpisodeSeed draw_episode_seed(const GameConfig& config, Rng& rng) {
  EpisodeSeed s;
  s.matching = draw_matching(config, rng);
  s.init = init_reputation(config, rng);
  return s;
}

std::vector<Agent*> seat_agents(Agent* learner, std::span<Agent* const> others) {
  std::vector<Agent*> seats;
  seats.reserve(others.size() + 1);
  seats.push_back(learner);
  seats.insert(seats.end(), others.begin(), others.end());
  return seats;
}

namespace {

void gather(const std::vector<double>& adj, const std::vector<BoundBlock>& blocks, std::vector<double>& out) {
  std::size_t k = 0;
  for (const BoundBlock& b : blocks) {
    for (int e = 0; e < b.size(); ++e) out[k++] += adj[b.first + e];
  }
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

BatchGradient batch_gradient(const Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                             std::span<const EpisodeSeed> batch) {
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  if (static_cast<int>(others.size()) + 1 != config.n_agents) {
    throw std::invalid_argument("batch_gradient: expected n_agents - 1 opponents");
  }
  BatchGradient g;
  if (learner.spec().train_action) g.action.assign(learner.action_net().param_count(), 0.0);
  if (learner.spec().train_signal) g.signal.assign(learner.signal_net().param_count(), 0.0);
  thread_local Tape tape(true);
  EpisodeOptions opt;
  opt.tracked = {0};
  int payoff_count = 0;
  for (const EpisodeSeed& seed : batch) {
    tape.clear();
    LearnerAgent me(learner, tape, true);
    const std::vector<Agent*> seats = seat_agents(&me, others);
    const EpisodeResult res = play_episode(seats, config, seed.matching, seed.init, tape, opt);
    const Var root = res.discounted_return[0];
    g.mean_return += root.value();
    if (res.interactions[0] > 0) {
      g.mean_payoff += per_interaction_payoff(res, 0);
      ++payoff_count;
    }
    if (!root.requires_grad()) continue;
    const std::vector<double> adj = tape.adjoints(root);
    if (!g.action.empty()) gather(adj, me.action_blocks(), g.action);
    if (!g.signal.empty()) gather(adj, me.signal_blocks(), g.signal);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& x : g.action) x *= inv;
  for (double& x : g.signal) x *= inv;
  g.mean_return *= inv;
  if (payoff_count > 0) g.mean_payoff /= payoff_count;
  g.norm_action = l2(g.action);
  g.norm_signal = l2(g.signal);
  return g;
}

void apply_gradient(Learner& learner, const BatchGradient& g) {
  if (!g.action.empty()) learner.action_opt().step(learner.action_net(), g.action, true);
  if (!g.signal.empty()) learner.signal_opt().step(learner.signal_net(), g.signal, true);
}

BatchGradient policy_gradient_step(Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                                   std::span<const EpisodeSeed> batch) {
  BatchGradient g = batch_gradient(learner, others, config, batch);
  apply_gradient(learner, g);
  return g;
}

BatchGradient reciprocity_update(Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                                 const TrainProtocol& protocol, Rng& rng) {
  std::vector<EpisodeSeed> batch;
  batch.reserve(protocol.batch);
  for (int k = 0; k < protocol.batch; ++k) batch.push_back(draw_episode_seed(config, rng));
  return policy_gradient_step(learner, others, config, batch);
}

double evaluate_payoff(const Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                       std::span<const EpisodeSeed> seeds) {
  Tape tape(false);
  double sum = 0.0;
  int count = 0;
  for (const EpisodeSeed& seed : seeds) {
    tape.clear();
    LearnerAgent me(learner, tape, false);
    const std::vector<Agent*> seats = seat_agents(&me, others);
    const EpisodeResult res = play_episode(seats, config, seed.matching, seed.init, tape, {});
    if (res.interactions[0] == 0) continue;
    sum += per_interaction_payoff(res, 0);
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

double evaluate_payoff(const Learner& learner, std::span<Agent* const> others, const GameConfig& config,
                       int episodes, Rng& rng) {
  std::vector<EpisodeSeed> seeds;
  seeds.reserve(episodes);
  for (int k = 0; k < episodes; ++k) seeds.push_back(draw_episode_seed(config, rng));
  return evaluate_payoff(learner, others, config, seeds);
}

namespace {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "identity") return Activation::kIdentity;
  throw std::invalid_argument("checkpoint: unknown activation " + s);
}

std::string expect_line(std::istream& is, const std::string& prefix) {
  std::string line;
  while (std::getline(is, line)) {
    if (!trim(line).empty()) break;
  }
  if (line.rfind(prefix, 0) != 0) throw std::invalid_argument("checkpoint: expected '" + prefix + "', got '" + line + "'");
  return trim(line.substr(prefix.size()));
}

}  // namespace

void save_net(std::ostream& os, const std::string& name, const PolicyNet& net) {
  os << "net " << name << "\n";
  os << "widths";
  for (int w : net.widths()) os << ' ' << w;
  os << "\n";
  os << "output " << activation_name(net.output_activation()) << "\n";
  char buf[64];
  for (const ParamBlock& b : net.blocks()) {
    os << "block " << b.rows << ' ' << b.cols << "\n";
    for (std::size_t k = 0; k < b.data.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%a", b.data[k]);
      os << (k ? " " : "") << buf;
    }
    os << "\n";
  }
}

PolicyNet load_net(std::istream& is, std::string* name) {
  const std::string n = expect_line(is, "net ");
  if (name) *name = n;
  std::istringstream ws(expect_line(is, "widths"));
  std::vector<int> widths;
  for (int w; ws >> w;) widths.push_back(w);
  if (widths.size() < 2 || widths.back() != 1) throw std::invalid_argument("checkpoint: bad widths");
  const Activation out = parse_activation(expect_line(is, "output"));
  PolicyNet net(widths.front(), std::vector<int>(widths.begin() + 1, widths.end() - 1), out);
  for (ParamBlock& b : net.blocks()) {
    std::istringstream hs(expect_line(is, "block"));
    int rows = 0, cols = 0;
    hs >> rows >> cols;
    if (rows != b.rows || cols != b.cols) throw std::invalid_argument("checkpoint: block shape mismatch");
    std::string line;
    std::getline(is, line);
    std::istringstream vs(line);
    std::string tok;
    for (double& x : b.data) {
      if (!(vs >> tok)) throw std::invalid_argument("checkpoint: truncated block");
      char* end = nullptr;
      x = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) throw std::invalid_argument("checkpoint: bad value " + tok);
    }
  }
  return net;
}

void save_checkpoint(std::ostream& os, const Learner& learner, const TrainProtocol& protocol) {
  os << "recipgrad-checkpoint 1\n";
  os << "protocol\n" << to_text(protocol) << "end\n";
  save_net(os, "action", learner.action_net());
  save_net(os, "signal", learner.signal_net());
}

void load_checkpoint(std::istream& is, Learner& learner, TrainProtocol* protocol) {
  expect_line(is, "recipgrad-checkpoint 1");
  expect_line(is, "protocol");
  std::string text, line;
  while (std::getline(is, line) && trim(line) != "end") text += line + "\n";
  if (protocol) {
    TrainProtocol p;
    for (const auto& [k, v] : parse_key_values(text)) {
      if (!apply_protocol_key(p, k, v)) throw std::invalid_argument("checkpoint: unknown protocol key " + k);
    }
    *protocol = p;
  }
  PolicyNet a = load_net(is);
  PolicyNet s = load_net(is);
  if (a.widths() != learner.action_net().widths() || s.widths() != learner.signal_net().widths()) {
    throw std::invalid_argument("checkpoint: architecture mismatch");
  }
  learner.action_net() = std::move(a);
  learner.signal_net() = std::move(s);
}

}  // namespace rg
