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


#include "rg/oppmodel.h"

#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

ObsBuffer::ObsBuffer(int window) : window_(window) {
  if (window < 1) throw std::invalid_argument("ObsBuffer: window must be >= 1");
}

namespace {

template <typename T>
void drop_older(std::vector<T>& items, std::vector<int>& iters, int cutoff) {
  std::size_t w = 0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (iters[k] > cutoff) {
      if (w != k) {
        items[w] = std::move(items[k]);
        iters[w] = iters[k];
      }
      ++w;
    }
  }
  items.resize(w);
  iters.resize(w);
}

}  // namespace

void ObsBuffer::advance(int iter) {
  const int cutoff = iter - window_;
  drop_older(records_, record_iter_, cutoff);
  drop_older(episodes_, episode_iter_, cutoff);
}

void ObsBuffer::append(const InteractionRecord& r, int iter) {
  records_.push_back(r);
  record_iter_.push_back(iter);
}

void ObsBuffer::append_episode(const std::vector<InteractionRecord>& log, const EpisodeSeed& seed, int iter) {
  for (const InteractionRecord& r : log) append(r, iter);
  episodes_.push_back(seed);
  episode_iter_.push_back(iter);
}

void ObsBuffer::write_csv(std::ostream& os) const {
  os << "iteration,step,donor,recipient,donor_action,recipient_score,donor_score,signal\n";
  for (std::size_t k = 0; k < records_.size(); ++k) {
    const InteractionRecord& r = records_[k];
    os << record_iter_[k] << ',' << r.step << ',' << r.donor << ',' << r.recipient << ','
       << format_real(r.donor_action) << ',' << format_real(r.recipient_score) << ','
       << format_real(r.donor_score) << ',' << format_real(r.signal) << '\n';
  }
}

void ObsBuffer::read_csv(std::istream& is) {
  records_.clear();
  record_iter_.clear();
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 8) throw std::invalid_argument("buffer csv: expected 8 columns");
    InteractionRecord r;
    r.step = parse_int(f[1]);
    r.donor = parse_int(f[2]);
    r.recipient = parse_int(f[3]);
    r.donor_action = parse_real(f[4]);
    r.recipient_score = parse_real(f[5]);
    r.donor_score = parse_real(f[6]);
    r.signal = parse_real(f[7]);
    append(r, parse_int(f[0]));
  }
}

SurrogateSet::SurrogateSet(const SurrogateOptions& options, std::vector<int> modeled, Rng& init_rng)
    : options_(options), modeled_(std::move(modeled)) {
  if (options_.action_arity < 1 || options_.action_arity > 2 || options_.signal_arity < 1 ||
      options_.signal_arity > 2) {
    throw std::invalid_argument("SurrogateSet: arities must be 1 or 2");
  }
  if (!(options_.lr > 0.0)) throw std::invalid_argument("SurrogateSet: bad fit options");
  if (options_.embed_dim < 1 || options_.embed_dim > 64) throw std::invalid_argument("SurrogateSet: embed_dim must lie in [1, 64]");
  for (std::size_t k = 0; k < modeled_.size(); ++k) slot_[modeled_[k]] = static_cast<int>(k);
  const bool shared = options_.mode == SurrogateOptions::Mode::kShared;
  const int extra = shared ? options_.embed_dim : 0;
  const int copies = shared ? 1 : static_cast<int>(modeled_.size());
  for (int c = 0; c < copies; ++c) {
    Fitted a{PolicyNet(options_.action_arity + extra, options_.hidden), {}};
    Fitted s{PolicyNet(options_.signal_arity + extra, options_.hidden), {}};
    a.net.init_uniform(init_rng);
    s.net.init_uniform(init_rng);
    a.opt = AdamState(a.net.param_count(), options_.lr);
    s.opt = AdamState(s.net.param_count(), options_.lr);
    action_.push_back(std::move(a));
    signal_.push_back(std::move(s));
  }
  if (shared) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t k = 0; k < modeled_.size(); ++k) {
      std::vector<double> z(options_.embed_dim);
      for (double& x : z) x = nd(init_rng);
      embed_.push_back(std::move(z));
      embed_opt_.emplace_back(options_.embed_dim, options_.lr);
    }
  }
}

int SurrogateSet::slot(int agent) const {
  const auto it = slot_.find(agent);
  if (it == slot_.end()) throw std::invalid_argument("SurrogateSet: agent " + std::to_string(agent) + " is not modeled");
  return it->second;
}

double SurrogateSet::eval(const Fitted& f, int agent, double x0, double x1, int arity) const {
  const double c = options_.center_inputs ? 0.5 : 0.0;
  double x[2 + 64];
  x[0] = x0 - c;
  x[1] = x1 - c;
  int n = arity;
  if (options_.mode == SurrogateOptions::Mode::kShared) {
    const std::vector<double>& z = embed_[slot(agent)];
    for (double v : z) x[n++] = v;
  }
  return f.net.eval(std::span<const double>(x, n));
}

Var SurrogateSet::eval_var(Tape& tape, const Fitted& f, int agent, Var x0, Var x1, int arity) const {
  Var x[2 + 64];
  x[0] = x0;
  x[1] = x1;
  if (options_.center_inputs) {
    x[0] = x0 - 0.5;
    if (arity > 1) x[1] = x1 - 0.5;
  }
  int n = arity;
  if (options_.mode == SurrogateOptions::Mode::kShared) {
    for (double v : embed_[slot(agent)]) x[n++] = tape.constant(v);
  }
  return f.net.forward(tape, std::span<const Var>(x, n));
}

double SurrogateSet::action(int agent, double r, double own) const {
  const int s = slot(agent);
  return eval(action_[options_.mode == SurrogateOptions::Mode::kShared ? 0 : s], agent, r, own,
              options_.action_arity);
}

double SurrogateSet::signal(int agent, double a, double own) const {
  const int s = slot(agent);
  return eval(signal_[options_.mode == SurrogateOptions::Mode::kShared ? 0 : s], agent, a, own,
              options_.signal_arity);
}

Var SurrogateSet::action(Tape& tape, int agent, Var r, Var own) const {
  const int s = slot(agent);
  return eval_var(tape, action_[options_.mode == SurrogateOptions::Mode::kShared ? 0 : s], agent, r, own,
                  options_.action_arity);
}

Var SurrogateSet::signal(Tape& tape, int agent, Var a, Var own) const {
  const int s = slot(agent);
  return eval_var(tape, signal_[options_.mode == SurrogateOptions::Mode::kShared ? 0 : s], agent, a, own,
                  options_.signal_arity);
}

namespace {

// Inputs and target of one record for one side.
struct Sample {
  double x0, x1, target;
};

Sample sample_of(const InteractionRecord& r, bool action_side) {
  if (action_side) return {r.recipient_score, r.donor_score, r.donor_action};
  return {r.donor_action, r.recipient_score, r.signal};
}

int owner_of(const InteractionRecord& r, bool action_side) { return action_side ? r.donor : r.recipient; }

}  // namespace

double SurrogateSet::mse_step(Fitted& f, int agent_hint, int arity, const std::vector<const InteractionRecord*>& batch,
                              bool action_side) {
  const bool shared = options_.mode == SurrogateOptions::Mode::kShared;
  const int d = shared ? options_.embed_dim : 0;
  const int n_in = arity + d;
  std::vector<double> grad(f.net.param_count(), 0.0), dp(f.net.param_count()), dx(n_in);
  std::map<int, std::vector<double>> egrad;
  const double c = options_.center_inputs ? 0.5 : 0.0;
  double x[2 + 64];
  double loss = 0.0;
  const double scale = 2.0 / static_cast<double>(batch.size());
  for (const InteractionRecord* r : batch) {
    const Sample s = sample_of(*r, action_side);
    const int agent = shared ? owner_of(*r, action_side) : agent_hint;
    x[0] = s.x0 - c;
    x[1] = s.x1 - c;
    if (shared) {
      const std::vector<double>& z = embed_[slot(agent)];
      for (int k = 0; k < d; ++k) x[arity + k] = z[k];
    }
    const double y = f.net.eval_grad(std::span<const double>(x, n_in), dp.data(), dx.data());
    const double e = y - s.target;
    loss += e * e;
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += scale * e * dp[k];
    if (shared) {
      auto& g = egrad[agent];
      g.resize(d, 0.0);
      for (int k = 0; k < d; ++k) g[k] += scale * e * dx[arity + k];
    }
  }
  std::vector<double> theta = f.net.flat();
  adam_step(std::span<double>(theta), grad, f.opt, false);
  f.net.set_flat(theta);
  for (auto& [agent, g] : egrad) {
    const int s = slot(agent);
    adam_step(std::span<double>(embed_[s]), g, embed_opt_[s], false);
  }
  return loss / static_cast<double>(batch.size());
}

double SurrogateSet::mse_full(const Fitted& f, int agent, int arity, const std::vector<const InteractionRecord*>& rows,
                              bool action_side) const {
  double loss = 0.0;
  for (const InteractionRecord* r : rows) {
    const Sample s = sample_of(*r, action_side);
    const double y = eval(f, options_.mode == SurrogateOptions::Mode::kShared ? owner_of(*r, action_side) : agent,
                          s.x0, s.x1, arity);
    loss += (y - s.target) * (y - s.target);
  }
  return rows.empty() ? 0.0 : loss / static_cast<double>(rows.size());
}

std::map<int, SurrogateMse> SurrogateSet::fit(const ObsBuffer& buffer, int steps, Rng& rng) {
  if (frozen_) throw std::logic_error("SurrogateSet::fit: surrogates are frozen");
  std::map<int, std::vector<const InteractionRecord*>> act_rows, sig_rows;
  for (const InteractionRecord& r : buffer.records()) {
    if (slot_.count(r.donor)) act_rows[r.donor].push_back(&r);
    if (slot_.count(r.recipient)) sig_rows[r.recipient].push_back(&r);
  }
  for (int j : modeled_) {
    if (act_rows[j].empty() || sig_rows[j].empty()) {
      throw std::invalid_argument("SurrogateSet::fit: no observations of agent " + std::to_string(j));
    }
  }
  const int mb = options_.minibatch;
  std::vector<const InteractionRecord*> batch;
  // minibatch <= 0 selects full-batch steps.
  auto draw = [&](const std::vector<const InteractionRecord*>& rows) {
    if (mb <= 0) {
      batch = rows;
      return;
    }
    batch.resize(mb);
    for (int k = 0; k < mb; ++k) batch[k] = rows[uniform_int(rng, 0, static_cast<int>(rows.size()) - 1)];
  };
  // In epoch mode one requested step is ceil(rows / minibatch) draws.
  auto inner = [&](std::size_t rows) -> int {
    if (!options_.epoch_steps || mb <= 0) return 1;
    return static_cast<int>((rows + mb - 1) / mb);
  };
  // Geometric decay from lr to lr_final within one fit call.
  const double lr_final = options_.lr_final > 0.0 ? options_.lr_final : options_.lr;
  auto set_lr = [&](int k, int total) {
    const double t = total > 1 ? static_cast<double>(k) / (total - 1) : 0.0;
    const double lr = options_.lr * std::pow(lr_final / options_.lr, t);
    for (Fitted& f : action_) f.opt.lr = lr;
    for (Fitted& f : signal_) f.opt.lr = lr;
    for (AdamState& e : embed_opt_) e.lr = lr;
  };
  if (options_.mode == SurrogateOptions::Mode::kShared) {
    std::vector<const InteractionRecord*> all_act, all_sig;
    for (int j : modeled_) {
      all_act.insert(all_act.end(), act_rows[j].begin(), act_rows[j].end());
      all_sig.insert(all_sig.end(), sig_rows[j].begin(), sig_rows[j].end());
    }
    for (int k = 0; k < steps; ++k) {
      set_lr(k, steps);
      for (int r = inner(all_act.size()); r > 0; --r) {
        draw(all_act);
        mse_step(action_[0], -1, options_.action_arity, batch, true);
      }
      for (int r = inner(all_sig.size()); r > 0; --r) {
        draw(all_sig);
        mse_step(signal_[0], -1, options_.signal_arity, batch, false);
      }
    }
  } else {
    for (int j : modeled_) {
      const int s = slot(j);
      for (int k = 0; k < steps; ++k) {
        set_lr(k, steps);
        for (int r = inner(act_rows[j].size()); r > 0; --r) {
          draw(act_rows[j]);
          mse_step(action_[s], j, options_.action_arity, batch, true);
        }
        for (int r = inner(sig_rows[j].size()); r > 0; --r) {
          draw(sig_rows[j]);
          mse_step(signal_[s], j, options_.signal_arity, batch, false);
        }
      }
    }
  }
  std::map<int, SurrogateMse> out;
  for (int j : modeled_) {
    const int s = options_.mode == SurrogateOptions::Mode::kShared ? 0 : slot(j);
    out[j] = {mse_full(action_[s], j, options_.action_arity, act_rows[j], true),
              mse_full(signal_[s], j, options_.signal_arity, sig_rows[j], false)};
  }
  return out;
}

void SurrogateSet::set_nets(int agent, const PolicyNet& action, const PolicyNet& signal) {
  if (options_.mode != SurrogateOptions::Mode::kPerOpponent) {
    throw std::logic_error("SurrogateSet::set_nets: only per-opponent sets hold one net pair per agent");
  }
  if (action.arity() != options_.action_arity || signal.arity() != options_.signal_arity) {
    throw std::invalid_argument("SurrogateSet::set_nets: arity mismatch");
  }
  const int s = slot(agent);
  action_[s].net = action;
  signal_[s].net = signal;
  action_[s].opt = AdamState(action.param_count(), options_.lr);
  signal_[s].opt = AdamState(signal.param_count(), options_.lr);
}

std::size_t SurrogateSet::param_count() const {
  std::size_t n = 0;
  for (const Fitted& f : action_) n += f.net.param_count();
  for (const Fitted& f : signal_) n += f.net.param_count();
  // Embeddings are per-opponent data, not estimator parameters.
  return n;
}

std::uint64_t SurrogateSet::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  };
  for (const auto* group : {&action_, &signal_}) {
    for (const Fitted& f : *group) {
      for (const ParamBlock& b : f.net.blocks()) {
        for (double v : b.data) mix(v);
      }
    }
  }
  for (const auto& z : embed_) {
    for (double v : z) mix(v);
  }
  return h;
}

SurrogateMse grid_mse(const SurrogateSet& set, int agent, const FixedAgentSpec& truth, int points) {
  SurrogateMse m;
  for (int i = 0; i < points; ++i) {
    const double u = static_cast<double>(i) / (points - 1);
    for (int k = 0; k < points; ++k) {
      const double v = static_cast<double>(k) / (points - 1);
      const double ea = set.action(agent, u, v) - fixed_action(truth, u, v);
      const double es = set.signal(agent, u, v) - fixed_signal(truth, u, v);
      m.action += ea * ea;
      m.signal += es * es;
    }
  }
  m.action /= points * points;
  m.signal /= points * points;
  return m;
}

Var SurrogateAgent::act(Tape& tape, Var recipient_score, Var own_score) {
  return set_.action(tape, agent_, recipient_score, own_score);
}

Var SurrogateAgent::signal(Tape& tape, Var donor_action, Var own_score) {
  return set_.signal(tape, agent_, donor_action, own_score);
}

std::vector<SurrogateAgent> surrogate_seats(const SurrogateSet& set, int n_agents) {
  std::vector<SurrogateAgent> seats;
  seats.reserve(n_agents - 1);
  for (int j = 1; j < n_agents; ++j) seats.emplace_back(set, j);
  return seats;
}

std::vector<Agent*> agent_ptrs(std::vector<SurrogateAgent>& seats) {
  std::vector<Agent*> out;
  out.reserve(seats.size());
  for (SurrogateAgent& s : seats) out.push_back(&s);
  return out;
}

void explore_pretrain(std::span<Agent* const> real_others, const Learner& learner, const GameConfig& config,
                      int episodes, int pretrain_steps, ObsBuffer& buffer, SurrogateSet& set, Rng& rng) {
  if (episodes <= 0) return;
  Tape tape(false);
  EpisodeOptions opt;
  opt.record_log = true;
  opt.random_agent = 0;
  opt.random_signal = learner.spec().train_signal;
  opt.noise_rng = &rng;
  for (int k = 0; k < episodes; ++k) {
    const EpisodeSeed seed = draw_episode_seed(config, rng);
    tape.clear();
    LearnerAgent me(learner, tape, false);
    const std::vector<Agent*> seats = seat_agents(&me, real_others);
    const EpisodeResult res = play_episode(seats, config, seed.matching, seed.init, tape, opt);
    buffer.append_episode(res.log, seed, 0);
  }
  set.unfreeze();
  set.fit(buffer, pretrain_steps, rng);
  set.freeze();
}

BatchGradient virtual_replay_update(Learner& learner, const SurrogateSet& set, const GameConfig& config,
                                    std::span<const EpisodeSeed> replay) {
  if (!set.frozen()) throw std::logic_error("virtual_replay_update: surrogates must be frozen");
  std::vector<SurrogateAgent> seats = surrogate_seats(set, config.n_agents);
  const std::vector<Agent*> ptrs = agent_ptrs(seats);
  return policy_gradient_step(learner, ptrs, config, replay);
}

double virtual_optimism_gap(const Learner& learner, const SurrogateSet& set, std::span<Agent* const> real_others,
                            const GameConfig& config, std::span<const EpisodeSeed> seeds) {
  std::vector<SurrogateAgent> seats = surrogate_seats(set, config.n_agents);
  const std::vector<Agent*> ptrs = agent_ptrs(seats);
  return evaluate_payoff(learner, ptrs, config, seeds) - evaluate_payoff(learner, real_others, config, seeds);
}

}  // namespace rg
