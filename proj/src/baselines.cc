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

#include "rg/baselines.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rg {

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kDpg: return "dpg";
    case BaselineMethod::kDdpg: return "ddpg";
    case BaselineMethod::kTd3: return "td3";
  }
  return "?";
}

BaselineMethod parse_baseline_method(const std::string& s) {
  if (s == "dpg") return BaselineMethod::kDpg;
  if (s == "ddpg") return BaselineMethod::kDdpg;
  if (s == "td3") return BaselineMethod::kTd3;
  throw std::invalid_argument("unknown baseline method: " + s);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("ReplayBuffer::at");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer::sample: empty buffer");
  std::vector<const Transition*> out(n);
  for (auto& p : out) p = &items_[uniform_int(rng, 0, static_cast<int>(items_.size()) - 1)];
  return out;
}

namespace {

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Learner seat for rollouts: deterministic outputs plus clamped noise on
// each trainable side.
class NoisyLearner : public Agent {
 public:
  NoisyLearner(const Learner& l, double sigma, Rng& rng) : l_(l), sigma_(sigma), rng_(rng) {}
  Var act(Tape& tape, Var r, Var own) override {
    double a = l_.action(r.value(), own.value());
    if (l_.spec().train_action && sigma_ > 0.0) a = clamp01(a + normal(rng_, 0.0, sigma_));
    return tape.constant(a);
  }
  Var signal(Tape& tape, Var x, Var own) override {
    double s = l_.signal(x.value(), own.value());
    if (l_.spec().train_signal && sigma_ > 0.0) s = clamp01(s + normal(rng_, 0.0, sigma_));
    return tape.constant(s);
  }

 private:
  const Learner& l_;
  double sigma_;
  Rng& rng_;
};

void link(std::vector<Transition>& ts, std::size_t first) {
  for (std::size_t k = first; k + 1 < ts.size(); ++k) ts[k].next_state = ts[k + 1].state;
  if (ts.size() > first) {
    ts.back().next_state = ts.back().state;
    ts.back().done = true;
  }
}

}  // namespace

RoleTransitions collect_transitions(const Learner& learner, std::span<Agent* const> others,
                                    const GameConfig& config, std::span<const EpisodeSeed> episodes, double sigma,
                                    Rng& rng, double lr2_kappa, double lr2_alpha) {
  if (sigma < 0.0) throw std::invalid_argument("collect_transitions: sigma must be >= 0");
  RoleTransitions out;
  Tape tape(false);
  NoisyLearner me(learner, sigma, rng);
  const std::vector<Agent*> seats = seat_agents(&me, others);
  EpisodeOptions opt;
  opt.record_log = true;
  const int aa = learner.spec().action_arity;
  const int sa = learner.spec().signal_arity;
  int counted = 0;
  for (const EpisodeSeed& seed : episodes) {
    tape.clear();
    const EpisodeResult res = play_episode(seats, config, seed.matching, seed.init, tape, opt);
    const std::size_t a0 = out.action.size();
    const std::size_t s0 = out.signal.size();
    double rep = 0.5;
    for (const InteractionRecord& r : res.log) {
      if (r.donor != 0 && r.recipient != 0) continue;
      Transition t;
      if (r.donor == 0) {
        rep = lr2_alpha * rep + (1.0 - lr2_alpha) * r.donor_score;
        t.state = {r.recipient_score};
        if (aa == 2) t.state.push_back(r.donor_score);
        t.action = r.donor_action;
        t.reward = -config.cost * r.donor_action;
      } else {
        rep = lr2_alpha * rep + (1.0 - lr2_alpha) * r.recipient_score;
        t.state = {r.donor_action};
        if (sa == 2) t.state.push_back(r.recipient_score);
        t.action = r.signal;
        t.reward = config.benefit * r.donor_action;
      }
      if (lr2_kappa > 0.0) t.reward = lr2_shape(t.reward, rep, lr2_kappa);
      (r.donor == 0 ? out.action : out.signal).push_back(std::move(t));
    }
    link(out.action, a0);
    link(out.signal, s0);
    if (res.interactions[0] > 0) {
      out.mean_payoff += per_interaction_payoff(res, 0);
      ++counted;
    }
  }
  if (counted > 0) out.mean_payoff /= counted;
  return out;
}

RoleTransitions collect_transitions(const Learner& learner, std::span<Agent* const> others,
                                    const GameConfig& config, std::span<const EpisodeSeed> episodes, double sigma,
                                    Rng& rng) {
  return collect_transitions(learner, others, config, episodes, sigma, rng, 0.0, 0.5);
}

double lr2_shape(double reward, double reputation_ema, double kappa) {
  if (kappa >= 1.0) return reward + kappa * reputation_ema;
  return kappa * reward + (1.0 - kappa) * reputation_ema * reward;
}

Critic::Critic(int state_dim, const std::vector<int>& hidden, double lr, Rng& rng)
    : net_(state_dim + 1, hidden, Activation::kIdentity) {
  net_.init_uniform(rng);
  target_ = net_;
  opt_ = AdamState(static_cast<std::size_t>(net_.param_count()), lr);
}

namespace {

double eval_sa(const PolicyNet& net, std::span<const double> s, double a) {
  double x[4];
  const std::size_t n = s.size();
  if (n + 1 > 4) throw std::invalid_argument("Critic: state too wide");
  std::copy(s.begin(), s.end(), x);
  x[n] = a;
  return net.eval(std::span<const double>(x, n + 1));
}

}  // namespace

double Critic::q(std::span<const double> s, double a) const { return eval_sa(net_, s, a); }
double Critic::q_target(std::span<const double> s, double a) const { return eval_sa(target_, s, a); }

double Critic::dq_da(std::span<const double> s, double a) const {
  double x[4], dx[4];
  const std::size_t n = s.size();
  std::copy(s.begin(), s.end(), x);
  x[n] = a;
  net_.eval_grad(std::span<const double>(x, n + 1), nullptr, dx);
  return dx[n];
}

double Critic::fit(std::span<const Transition* const> batch, std::span<const double> targets) {
  if (batch.empty()) throw std::invalid_argument("Critic::fit: empty batch");
  const std::size_t p = static_cast<std::size_t>(net_.param_count());
  std::vector<double> grad(p, 0.0), dp(p);
  double x[4];
  double loss = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Transition& t = *batch[k];
    const std::size_t n = t.state.size();
    std::copy(t.state.begin(), t.state.end(), x);
    x[n] = t.action;
    const double q = net_.eval_grad(std::span<const double>(x, n + 1), dp.data(), nullptr);
    const double err = q - targets[k];
    loss += err * err;
    for (std::size_t i = 0; i < p; ++i) grad[i] += 2.0 * err * dp[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  std::vector<double> theta = net_.flat();
  adam_step(std::span<double>(theta), grad, opt_, false);
  net_.set_flat(theta);
  return loss * inv;
}

void Critic::polyak(double tau) {
  std::vector<double> online = net_.flat();
  std::vector<double> tgt = target_.flat();
  for (std::size_t i = 0; i < tgt.size(); ++i) tgt[i] = tau * online[i] + (1.0 - tau) * tgt[i];
  target_.set_flat(tgt);
}

std::vector<double> bellman_targets(std::span<const Transition* const> batch, const Critic& c1, const Critic* c2,
                                    const PolicyNet& actor_target, const BaselineOptions& options, Rng& rng) {
  std::vector<double> y(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const Transition& t = *batch[k];
    if (t.done || options.gamma == 0.0) {
      y[k] = t.reward;
      continue;
    }
    double a2 = actor_target.eval(t.next_state);
    double q2;
    switch (options.method) {
      case BaselineMethod::kDpg:
        q2 = c1.q(t.next_state, a2);
        break;
      case BaselineMethod::kDdpg:
        q2 = c1.q_target(t.next_state, a2);
        break;
      case BaselineMethod::kTd3: {
        const double eps = std::clamp(normal(rng, 0.0, options.target_noise), -options.target_clip, options.target_clip);
        a2 = clamp01(a2 + eps);
        q2 = c1.q_target(t.next_state, a2);
        if (c2 != nullptr) q2 = std::min(q2, c2->q_target(t.next_state, a2));
        break;
      }
      default:
        q2 = 0.0;
    }
    y[k] = t.reward + options.gamma * q2;
  }
  return y;
}

double actor_update(PolicyNet& actor, NetOptimizer& opt, const Critic& critic,
                    std::span<const Transition* const> batch) {
  if (batch.empty()) throw std::invalid_argument("actor_update: empty batch");
  const std::size_t p = static_cast<std::size_t>(actor.param_count());
  std::vector<double> grad(p, 0.0), dp(p);
  for (const Transition* t : batch) {
    const double a = actor.eval_grad(t->state, dp.data(), nullptr);
    const double dq = critic.dq_da(t->state, a);
    for (std::size_t i = 0; i < p; ++i) grad[i] += dq * dp[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  double norm = 0.0;
  for (double& g : grad) {
    g *= inv;
    norm += g * g;
  }
  opt.step(actor, grad, true);
  return std::sqrt(norm);
}

ActorCriticRole::ActorCriticRole(const PolicyNet& actor, const BaselineOptions& options, Rng& rng)
    : options_(options), replay_(options.capacity), actor_target_(actor) {
  critics_[0] = Critic(actor.arity(), options.critic_hidden, options.critic_lr, rng);
  if (options.method == BaselineMethod::kTd3) {
    critics_[1] = Critic(actor.arity(), options.critic_hidden, options.critic_lr, rng);
  }
}

void ActorCriticRole::step(PolicyNet& actor, NetOptimizer& opt, std::span<const Transition* const> batch, Rng& rng) {
  const bool td3 = options_.method == BaselineMethod::kTd3;
  const PolicyNet& next_actor = options_.method == BaselineMethod::kDpg ? actor : actor_target_;
  const std::vector<double> y = bellman_targets(batch, critics_[0], td3 ? &critics_[1] : nullptr, next_actor, options_, rng);
  critics_[0].fit(batch, y);
  if (td3) critics_[1].fit(batch, y);
  ++critic_steps_;
  if (td3 && critic_steps_ % options_.policy_delay != 0) return;
  last_actor_grad_ = actor_update(actor, opt, critics_[0], batch);
  if (options_.method == BaselineMethod::kDpg) return;
  critics_[0].polyak(options_.tau);
  if (td3) critics_[1].polyak(options_.tau);
  std::vector<double> online = actor.flat();
  std::vector<double> tgt = actor_target_.flat();
  for (std::size_t i = 0; i < tgt.size(); ++i) tgt[i] = options_.tau * online[i] + (1.0 - options_.tau) * tgt[i];
  actor_target_.set_flat(tgt);
}

void ActorCriticRole::train(PolicyNet& actor, NetOptimizer& opt, const std::vector<Transition>& fresh, Rng& rng) {
  if (options_.method == BaselineMethod::kDpg) {
    if (fresh.empty()) return;
    std::vector<const Transition*> batch;
    batch.reserve(fresh.size());
    for (const Transition& t : fresh) batch.push_back(&t);
    step(actor, opt, batch, rng);
    return;
  }
  for (const Transition& t : fresh) replay_.push(t);
  if (replay_.size() == 0) return;
  for (int k = 0; k < options_.grad_steps; ++k) {
    const std::vector<const Transition*> batch = replay_.sample(static_cast<std::size_t>(options_.batch), rng);
    step(actor, opt, batch, rng);
  }
}

BaselineTrainer::BaselineTrainer(Learner& learner, const BaselineOptions& options, Rng& rng)
    : learner_(learner), options_(options) {
  if (learner.spec().train_action) action_ = std::make_unique<ActorCriticRole>(learner.action_net(), options, rng);
  if (learner.spec().train_signal) signal_ = std::make_unique<ActorCriticRole>(learner.signal_net(), options, rng);
}

BaselineIterStats BaselineTrainer::iterate(std::span<Agent* const> others, const GameConfig& config, int n_play,
                                           Rng& rng) {
  BaselineIterStats stats;
  for (int e = 0; e < n_play; ++e) {
    const EpisodeSeed seed = draw_episode_seed(config, rng);
    const RoleTransitions tr = collect_transitions(learner_, others, config, std::span<const EpisodeSeed>(&seed, 1),
                                                   options_.rollout_noise, rng, options_.lr2_kappa, options_.lr2_alpha);
    stats.payoff += tr.mean_payoff;
    if (action_) {
      action_->train(learner_.action_net(), learner_.action_opt(), tr.action, rng);
      stats.grad_action += action_->last_actor_grad();
    }
    if (signal_) {
      signal_->train(learner_.signal_net(), learner_.signal_opt(), tr.signal, rng);
      stats.grad_signal += signal_->last_actor_grad();
    }
  }
  if (n_play > 0) {
    stats.payoff /= n_play;
    stats.grad_action /= n_play;
    stats.grad_signal /= n_play;
  }
  return stats;
}

}  // namespace rg
