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

#include "rg/expkit.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

namespace {

constexpr const char* kMetricHeader =
    "outer_iter,seed,payoff_real,payoff_virtual,std_action,std_signal,grad_action,grad_signal,surrogate_mse";

std::string opt_field(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& s) {
  if (trim(s).empty()) return std::nullopt;
  return parse_real(s);
}

// Independent generator per (seed, stream).
Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

enum StreamId : std::uint64_t { kInit = 1, kTrain = 2, kEval = 3, kFinal = 4, kSurrogate = 5 };

std::vector<EpisodeSeed> draw_seeds(const GameConfig& config, int n, Rng& rng) {
  std::vector<EpisodeSeed> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) out.push_back(draw_episode_seed(config, rng));
  return out;
}

struct World {
  std::vector<FixedAgent> agents;
  std::vector<Agent*> ptrs;
  explicit World(const std::vector<FixedAgentSpec>& specs) {
    agents.reserve(specs.size());
    for (const FixedAgentSpec& s : specs) agents.emplace_back(s);
    for (FixedAgent& a : agents) ptrs.push_back(&a);
  }
};

std::string checkpoint_text(const Learner& l, const TrainProtocol& p) {
  std::ostringstream os;
  save_checkpoint(os, l, p);
  return os.str();
}

std::vector<double> signal_profile(const Learner& l) {
  std::vector<double> p(21);
  for (int k = 0; k < 21; ++k) p[k] = l.signal(k / 20.0, 0.5);
  return p;
}

std::vector<double> action_profile(const Learner& l) {
  std::vector<double> p(21);
  for (int k = 0; k < 21; ++k) p[k] = l.action(k / 20.0, 0.5);
  return p;
}

// Shared bookkeeping for every training loop.
class Tracker {
 public:
  Tracker(const ExperimentSpec& spec, std::uint64_t seed, const ProgressFn& progress)
      : spec_(spec), seed_(seed), progress_(progress) {}

  void add_grad(double a, double s) {
    ga_ += a;
    gs_ += s;
    sum_a_ += a;
    sum_s_ += s;
    ++n_;
  }

  void end_iter(int t, const Learner& learner, double payoff, std::optional<double> virt,
                std::optional<double> mse) {
    MetricRow row;
    row.outer_iter = t;
    row.seed = seed_;
    row.payoff_real = payoff;
    row.payoff_virtual = virt;
    row.std_action = learner.profile_std_action();
    row.std_signal = learner.profile_std_signal();
    row.grad_action = n_ > 0 ? ga_ / n_ : 0.0;
    row.grad_signal = n_ > 0 ? gs_ / n_ : 0.0;
    row.surrogate_mse = mse;
    ga_ = gs_ = 0.0;
    n_ = 0;
    rows_.push_back(row);
    if (progress_) progress_(row);
    if (spec_.best_checkpoint && (!best_ || payoff > best_payoff_)) {
      best_ = std::make_unique<Learner>(learner);
      best_payoff_ = payoff;
      best_iter_ = t;
    }
  }

  SeedResult finish(const Learner& last, int t_last, const std::function<double(const Learner&)>& final_eval) {
    SeedResult r;
    r.seed = seed_;
    r.rows = std::move(rows_);
    const Learner& rep = best_ ? *best_ : last;
    r.reported_iter = best_ ? best_iter_ : t_last;
    r.final_payoff = final_eval(rep);
    r.std_action = rep.profile_std_action();
    r.std_signal = rep.profile_std_signal();
    r.profile_action = action_profile(rep);
    r.profile_signal = signal_profile(rep);
    r.checkpoint = checkpoint_text(rep, spec_.protocol);
    r.grad_ratio = sum_a_ > 0.0 ? sum_s_ / sum_a_ : 0.0;
    return r;
  }

 private:
  const ExperimentSpec& spec_;
  std::uint64_t seed_;
  const ProgressFn& progress_;
  std::vector<MetricRow> rows_;
  double ga_ = 0.0, gs_ = 0.0, sum_a_ = 0.0, sum_s_ = 0.0;
  int n_ = 0;
  std::unique_ptr<Learner> best_;
  double best_payoff_ = 0.0;
  int best_iter_ = 0;
};

SeedResult run_donation(const ExperimentSpec& spec, std::uint64_t seed, const ProgressFn& progress) {
  const GameConfig& game = spec.game;
  const TrainProtocol& proto = spec.protocol;
  const std::vector<FixedAgentSpec> opp_specs = spec.seated_opponents();
  World world(opp_specs);
  Rng init_rng = stream(seed, kInit);
  Rng train_rng = stream(seed, kTrain);
  Rng eval_rng = stream(seed, kEval);
  Rng final_rng = stream(seed, kFinal);
  Learner learner(spec.learner, proto, init_rng);
  const std::vector<EpisodeSeed> eval_seeds = draw_seeds(game, spec.eval_episodes, eval_rng);
  const std::vector<EpisodeSeed> final_seeds = draw_seeds(game, spec.final_eval_episodes, final_rng);
  Tracker tracker(spec, seed, progress);
  const int t_outer = proto.effective_outer_iters();

  auto real_payoff = [&](const Learner& l, std::span<const EpisodeSeed> seeds) {
    return evaluate_payoff(l, world.ptrs, game, seeds);
  };

  if (spec.method != Method::kReciprocity) {
    BaselineOptions bo = spec.baseline;
    bo.method = spec.method == Method::kDpg ? BaselineMethod::kDpg
                : spec.method == Method::kDdpg ? BaselineMethod::kDdpg
                                               : BaselineMethod::kTd3;
    BaselineTrainer trainer(learner, bo, init_rng);
    for (int t = 1; t <= t_outer; ++t) {
      const BaselineIterStats st = trainer.iterate(world.ptrs, game, proto.n_play, train_rng);
      tracker.add_grad(st.grad_action, st.grad_signal);
      tracker.end_iter(t, learner, real_payoff(learner, eval_seeds), std::nullopt, std::nullopt);
    }
  } else if (spec.access == Access::kOracle) {
    for (int t = 1; t <= t_outer; ++t) {
      for (int k = 0; k < proto.n_train; ++k) {
        const BatchGradient g = reciprocity_update(learner, world.ptrs, game, proto, train_rng);
        tracker.add_grad(g.norm_action, g.norm_signal);
      }
      tracker.end_iter(t, learner, real_payoff(learner, eval_seeds), std::nullopt, std::nullopt);
    }
  } else {
    const OppModelConfig& om = spec.oppmodel;
    std::vector<int> modeled(game.n_agents - 1);
    std::iota(modeled.begin(), modeled.end(), 1);
    Rng surrogate_rng = stream(seed, kSurrogate);
    SurrogateSet set(om.surrogate, modeled, surrogate_rng);
    ObsBuffer buffer(om.window);
    explore_pretrain(world.ptrs, learner, game, om.explore_episodes, om.pretrain_steps, buffer, set, train_rng);
    std::vector<SurrogateAgent> seats = surrogate_seats(set, game.n_agents);
    const std::vector<Agent*> virtual_others = agent_ptrs(seats);
    Tape tape(false);
    EpisodeOptions play;
    play.record_log = true;
    play.noisy_agent = proto.explore_noise > 0.0 ? 0 : -1;
    play.action_noise = proto.explore_noise;
    play.noise_rng = &train_rng;
    std::vector<EpisodeSeed> batch;
    for (int t = 1; t <= t_outer; ++t) {
      buffer.advance(t);
      for (int e = 0; e < proto.n_play; ++e) {
        const EpisodeSeed s = draw_episode_seed(game, train_rng);
        tape.clear();
        LearnerAgent me(learner, tape, false);
        const std::vector<Agent*> all = seat_agents(&me, world.ptrs);
        const EpisodeResult res = play_episode(all, game, s.matching, s.init, tape, play);
        buffer.append_episode(res.log, s, t);
      }
      if (om.online) {
        set.unfreeze();
        set.fit(buffer, om.fit_steps, train_rng);
        set.freeze();
      }
      const std::vector<EpisodeSeed>& pool = buffer.episodes();
      for (int k = 0; k < proto.n_train; ++k) {
        batch.clear();
        for (int b = 0; b < proto.batch; ++b) {
          batch.push_back(pool[uniform_int(train_rng, 0, static_cast<int>(pool.size()) - 1)]);
        }
        const BatchGradient g = virtual_replay_update(learner, set, game, batch);
        tracker.add_grad(g.norm_action, g.norm_signal);
      }
      double worst = 0.0;
      for (int j : modeled) worst = std::max(worst, grid_mse(set, j, opp_specs[j - 1]).max());
      const double virt = evaluate_payoff(learner, virtual_others, game, eval_seeds);
      tracker.end_iter(t, learner, real_payoff(learner, eval_seeds), virt, worst);
    }
  }
  return tracker.finish(learner, t_outer, [&](const Learner& l) { return real_payoff(l, final_seeds); });
}

SeedResult run_pd(const ExperimentSpec& spec, std::uint64_t seed, const ProgressFn& progress) {
  const GameConfig& game = spec.game;
  const TrainProtocol& proto = spec.protocol;
  World world(spec.seated_opponents());
  Rng init_rng = stream(seed, kInit);
  Rng train_rng = stream(seed, kTrain);
  Learner learner(spec.learner, proto, init_rng);
  Tracker tracker(spec, seed, progress);
  const int t_outer = proto.effective_outer_iters();
  std::vector<EpisodeSeed> batch;
  for (int t = 1; t <= t_outer; ++t) {
    for (int k = 0; k < proto.n_train; ++k) {
      batch = draw_seeds(game, proto.batch, train_rng);
      const BatchGradient g = pd_batch_gradient(learner, world.ptrs, game, spec.pd, batch, train_rng);
      apply_gradient(learner, g);
      tracker.add_grad(g.norm_action, g.norm_signal);
    }
    Rng eval_rng = stream(seed, kEval);
    tracker.end_iter(t, learner, pd_evaluate(learner, world.ptrs, game, spec.pd, spec.eval_episodes, eval_rng),
                     std::nullopt, std::nullopt);
  }
  return tracker.finish(learner, t_outer, [&](const Learner& l) {
    Rng final_rng = stream(seed, kFinal);
    return pd_evaluate(l, world.ptrs, game, spec.pd, spec.final_eval_episodes, final_rng);
  });
}

}  // namespace

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
  os << kMetricHeader << "\n";
  for (const MetricRow& r : rows) {
    os << r.outer_iter << "," << r.seed << "," << format_real(r.payoff_real) << "," << opt_field(r.payoff_virtual)
       << "," << format_real(r.std_action) << "," << format_real(r.std_signal) << "," << format_real(r.grad_action)
       << "," << format_real(r.grad_signal) << "," << opt_field(r.surrogate_mse) << "\n";
  }
}

std::vector<MetricRow> read_metrics_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != kMetricHeader) {
    throw std::invalid_argument("metrics csv: unexpected header");
  }
  std::vector<MetricRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    // split() trims and keeps empty fields.
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 9) throw std::invalid_argument("metrics csv line " + std::to_string(lineno) + ": expected 9 fields");
    MetricRow r;
    r.outer_iter = parse_int(f[0]);
    r.seed = std::stoull(f[1]);
    r.payoff_real = parse_real(f[2]);
    r.payoff_virtual = parse_opt(f[3]);
    r.std_action = parse_real(f[4]);
    r.std_signal = parse_real(f[5]);
    r.grad_action = parse_real(f[6]);
    r.grad_signal = parse_real(f[7]);
    r.surrogate_mse = parse_opt(f[8]);
    rows.push_back(r);
  }
  return rows;
}

bool discriminative(const SeedResult& r, const LearnerSpec& spec) {
  if (spec.train_action && r.std_action < kDiscriminativeThreshold) return false;
  if (spec.train_signal && r.std_signal < kDiscriminativeThreshold) return false;
  return true;
}

double ExperimentResult::mean_payoff() const {
  if (seeds.empty()) return 0.0;
  double s = 0.0;
  for (const SeedResult& r : seeds) s += r.final_payoff;
  return s / static_cast<double>(seeds.size());
}

double ExperimentResult::std_payoff() const {
  std::vector<double> v;
  for (const SeedResult& r : seeds) v.push_back(r.final_payoff);
  return sample_std(v);
}

int ExperimentResult::discriminative_count() const {
  int n = 0;
  for (const SeedResult& r : seeds) n += discriminative(r, spec.learner) ? 1 : 0;
  return n;
}

SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed, const ProgressFn& progress) {
  return spec.kind == GameKind::kPrisonersDilemma ? run_pd(spec, seed, progress) : run_donation(spec, seed, progress);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress) {
  spec.validate();
  ExperimentResult out;
  out.spec = spec;
  for (std::uint64_t s : spec.protocol.seeds) out.seeds.push_back(run_seed(spec, s, progress));
  return out;
}

std::vector<ExperimentSpec> expand_sweep(
    const ExperimentSpec& base, const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
    std::vector<std::vector<std::pair<std::string, std::string>>>* assignments) {
  std::vector<ExperimentSpec> specs{base};
  std::vector<std::vector<std::pair<std::string, std::string>>> assign{{}};
  for (const auto& [axis, values] : axes) {
    if (values.empty()) throw std::invalid_argument("sweep: axis " + axis + " has no values");
    const std::string key = axis == "p" ? "pool.p" : axis;
    std::vector<ExperimentSpec> next;
    std::vector<std::vector<std::pair<std::string, std::string>>> next_assign;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      for (const std::string& v : values) {
        ExperimentSpec s = specs[k];
        apply_spec_key(s, key, v);
        next.push_back(std::move(s));
        next_assign.push_back(assign[k]);
        next_assign.back().emplace_back(axis, v);
      }
    }
    specs = std::move(next);
    assign = std::move(next_assign);
  }
  if (assignments != nullptr) *assignments = std::move(assign);
  return specs;
}

std::vector<SweepCell> sweep(const ExperimentSpec& base,
                             const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                             const ProgressFn& progress) {
  std::vector<std::vector<std::pair<std::string, std::string>>> assign;
  const std::vector<ExperimentSpec> specs = expand_sweep(base, axes, &assign);
  for (const ExperimentSpec& s : specs) s.validate();
  std::vector<SweepCell> out;
  for (std::size_t k = 0; k < specs.size(); ++k) out.push_back({assign[k], run_experiment(specs[k], progress)});
  return out;
}

DemoReport demo_verify(std::uint64_t seed, double eps) {
  GameConfig game;
  game.n_agents = 3;
  game.benefit = 2.0;
  game.cost = 1.0;
  game.aggregator.kind = AggregatorSpec::Kind::kMean;
  game.aggregator.window = 1;
  game.init.kind = ReputationInit::Kind::kConstant;
  game.init.value = 0.5;
  const MatchingSequence matching{{0, 2}, {1, 0}, {0, 1}};
  const std::vector<double> init(3, 0.5);

  Rng rng(seed);
  LearnerSpec ls;
  ls.action_hidden = {10};
  ls.signal_hidden = {20};
  TrainProtocol proto;
  Learner learner(ls, proto, rng);
  std::vector<NetAgent> others;
  for (int idx = 1; idx <= 2; ++idx) {
    PolicyNet a(1, {10 + idx});
    PolicyNet s(1, {20 + idx});
    a.init_uniform(rng);
    s.init_uniform(rng);
    others.emplace_back(std::move(a), std::move(s));
  }
  std::vector<Agent*> other_ptrs{&others[0], &others[1]};

  DemoReport rep;
  Tape tape(true);
  LearnerAgent me(learner, tape, true);
  std::vector<Agent*> seats = seat_agents(&me, other_ptrs);
  EpisodeOptions opt;
  opt.tracked = {0};
  const EpisodeResult res = play_episode(seats, game, matching, init, tape, opt);
  const Var root = res.discounted_return[0];
  rep.episode_return = root.value();
  const std::vector<std::vector<double>> grads = backward(root, me.action_blocks());
  rep.tape_grad = flatten_grads(grads);

  auto replay = [&](const Learner& l) {
    Tape t(false);
    LearnerAgent agent(l, t, false);
    std::vector<Agent*> s = seat_agents(&agent, other_ptrs);
    return play_episode(s, game, matching, init, t, {}).reward[0];
  };
  const double base = replay(learner);
  const std::vector<double> theta = learner.action_net().flat();
  for (std::size_t k = 0; k < theta.size(); ++k) {
    Learner bumped = learner;
    std::vector<double> th = theta;
    th[k] += eps;
    bumped.action_net().set_flat(th);
    const double g = (replay(bumped) - base) / eps;
    rep.fd_grad.push_back(g);
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(g - rep.tape_grad[k]));
  }
  rep.weights_checked = static_cast<int>(theta.size());
  return rep;
}

}  // namespace rg
