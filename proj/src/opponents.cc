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


#include "rg/opponents.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "rg/strings.h"

namespace rg {

namespace {

struct SignalEval {
  double value, dx, dy;
};

SignalEval signal_eval(const NormParams& p, double x, double y) {
  const double b = p.beta;
  switch (p.norm) {
    case NormId::kIdentity: return {x, 1.0, 0.0};
    case NormId::kL6: {
      const double tx = std::tanh(b * (x - 0.5));
      const double ty = std::tanh(b * (y - 0.5));
      return {0.5 * (1.0 + tx * ty), 0.5 * b * (1.0 - tx * tx) * ty, 0.5 * b * (1.0 - ty * ty) * tx};
    }
    case NormId::kL3: {
      const double tx = std::tanh(b * (x - 0.5));
      const double ty = std::tanh(b * (y - 0.5));
      return {1.0 - 0.25 * (1.0 - tx) * (1.0 + ty), 0.25 * b * (1.0 - tx * tx) * (1.0 + ty),
              -0.25 * b * (1.0 - ty * ty) * (1.0 - tx)};
    }
  }
  return {x, 1.0, 0.0};
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double dsmn_signal(const NormParams& p, double x, double y) { return signal_eval(p, x, y).value; }

Var dsmn_signal(const NormParams& p, Var x, Var y) {
  const SignalEval e = signal_eval(p, x.value(), y.value());
  return x.tape->push(e.value, {{x, e.dx}, {y, e.dy}});
}

double dsmn_action(const NormParams& p, double recipient_score, double /*own_score*/) {
  if (p.norm == NormId::kIdentity) return recipient_score;
  return 0.5 * (1.0 + std::tanh(p.beta * (recipient_score - 0.5)));
}

Var dsmn_action(const NormParams& p, Var recipient_score, Var /*own_score*/) {
  if (p.norm == NormId::kIdentity) return recipient_score;
  const double t = std::tanh(p.beta * (recipient_score.value() - 0.5));
  return recipient_score.tape->push(0.5 * (1.0 + t), {{recipient_score, 0.5 * p.beta * (1.0 - t * t)}});
}

void FixedAgentSpec::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("fixed agent: beta must be positive");
  const bool needs_norm = kind == FixedKind::kAllDefector || kind == FixedKind::kProudCoop ||
                          kind == FixedKind::kHybridCoop;
  if (needs_norm && !signal_norm) {
    throw std::invalid_argument("fixed agent: " + to_string(*this) + " requires a signal norm");
  }
}

NormId FixedAgentSpec::effective_signal_norm() const {
  if (signal_norm) return *signal_norm;
  switch (kind) {
    case FixedKind::kL3: return NormId::kL3;
    case FixedKind::kL6: return NormId::kL6;
    case FixedKind::kIdentity: return NormId::kIdentity;
    default: throw std::invalid_argument("fixed agent: missing signal norm");
  }
}

int FixedAgentSpec::action_arity() const {
  return kind == FixedKind::kHybridCoop || kind == FixedKind::kProudCoop ? 2 : 1;
}

std::string to_string(const FixedAgentSpec& spec) {
  std::string head;
  switch (spec.kind) {
    case FixedKind::kL3: head = "L3"; break;
    case FixedKind::kL6: head = "L6"; break;
    case FixedKind::kIdentity: head = "identity"; break;
    case FixedKind::kAllDefector: head = "AllD"; break;
    case FixedKind::kProudCoop: head = "ProudCoop"; break;
    case FixedKind::kHybridCoop: head = "HybridCoop"; break;
  }
  if (spec.signal_norm) head += "(" + to_string(*spec.signal_norm) + ")";
  return head;
}

FixedAgentSpec parse_fixed_agent(const std::string& s) {
  const std::string t = trim(s);
  FixedAgentSpec spec;
  std::string head = t;
  const auto open = t.find('(');
  if (open != std::string::npos) {
    const auto close = t.find(')', open);
    if (close == std::string::npos) throw std::invalid_argument("fixed agent: unbalanced '(' in " + s);
    spec.signal_norm = parse_norm(t.substr(open + 1, close - open - 1));
    head = trim(t.substr(0, open));
  }
  const std::string h = lower(head);
  if (h == "l3") spec.kind = FixedKind::kL3;
  else if (h == "l6") spec.kind = FixedKind::kL6;
  else if (h == "identity") spec.kind = FixedKind::kIdentity;
  else if (h == "alld" || h == "alldefector" || h == "all-defector") spec.kind = FixedKind::kAllDefector;
  else if (h == "proudcoop" || h == "proud-coop") spec.kind = FixedKind::kProudCoop;
  else if (h == "hybridcoop" || h == "hybrid-coop") spec.kind = FixedKind::kHybridCoop;
  else throw std::invalid_argument("unknown fixed agent: " + s);
  spec.validate();
  return spec;
}

std::vector<FixedAgentSpec> parse_fixed_agents(const std::string& s) {
  std::vector<FixedAgentSpec> out;
  for (const std::string& item : split(s, ',')) {
    if (item.empty()) continue;
    std::string body = item;
    int repeat = 1;
    const auto x = item.find_last_of('x');
    if (x != std::string::npos && x + 1 < item.size() && item.find(')') < x) {
      repeat = parse_int(item.substr(x + 1));
      body = item.substr(0, x);
    }
    const FixedAgentSpec spec = parse_fixed_agent(body);
    for (int k = 0; k < repeat; ++k) out.push_back(spec);
  }
  return out;
}

double fixed_action(const FixedAgentSpec& spec, double r, double own) {
  switch (spec.kind) {
    case FixedKind::kL3: return dsmn_action({NormId::kL3, spec.beta}, r, own);
    case FixedKind::kL6: return dsmn_action({NormId::kL6, spec.beta}, r, own);
    case FixedKind::kIdentity: return r;
    case FixedKind::kAllDefector: return 0.0;
    case FixedKind::kProudCoop: return logistic(spec.gain * (own - spec.midpoint));
    case FixedKind::kHybridCoop: return logistic(spec.gain * (0.5 * own + 0.5 * r - spec.midpoint));
  }
  return 0.0;
}

Var fixed_action(const FixedAgentSpec& spec, Tape& tape, Var r, Var own) {
  switch (spec.kind) {
    case FixedKind::kL3: return dsmn_action({NormId::kL3, spec.beta}, r, own);
    case FixedKind::kL6: return dsmn_action({NormId::kL6, spec.beta}, r, own);
    case FixedKind::kIdentity: return r;
    case FixedKind::kAllDefector: return tape.constant(0.0);
    case FixedKind::kProudCoop: {
      const double y = logistic(spec.gain * (own.value() - spec.midpoint));
      return tape.push(y, {{own, spec.gain * y * (1.0 - y)}});
    }
    case FixedKind::kHybridCoop: {
      const double y = logistic(spec.gain * (0.5 * own.value() + 0.5 * r.value() - spec.midpoint));
      const double d = 0.5 * spec.gain * y * (1.0 - y);
      return tape.push(y, {{own, d}, {r, d}});
    }
  }
  return tape.constant(0.0);
}

double fixed_signal(const FixedAgentSpec& spec, double a, double own) {
  return dsmn_signal({spec.effective_signal_norm(), spec.beta}, a, own);
}

Var fixed_signal(const FixedAgentSpec& spec, Tape& /*tape*/, Var a, Var own) {
  return dsmn_signal({spec.effective_signal_norm(), spec.beta}, a, own);
}

Var FixedAgent::act(Tape& tape, Var recipient_score, Var own_score) {
  return fixed_action(spec_, tape, recipient_score, own_score);
}

Var FixedAgent::signal(Tape& tape, Var donor_action, Var own_score) {
  return fixed_signal(spec_, tape, donor_action, own_score);
}

std::vector<double> warmup_stationary(NormId norm, const WarmupOptions& o, Rng& rng) {
  if (o.rounds < 1) throw std::invalid_argument("warmup: rounds must be >= 1");
  if (o.n_agents < 2) throw std::invalid_argument("warmup: n_agents must be >= 2");
  const NormParams p{norm, o.beta};
  const int n = o.n_agents;
  std::vector<double> score(n), sum(n, 0.0);
  std::vector<long> count(n, 0);
  for (double& s : score) s = uniform01(rng);
  for (int round = 0; round < o.rounds; ++round) {
    for (int i = 0; i < n; ++i) {
      int j = uniform_int(rng, 0, n - 2);
      if (j >= i) ++j;
      double a = dsmn_action(p, score[j], score[i]);
      a = std::clamp(a + normal(rng, 0.0, o.exec_noise), 0.0, 1.0);
      double s = dsmn_signal(p, a, score[j]);
      s = std::clamp(s + normal(rng, 0.0, o.assess_noise), 0.0, 1.0);
      sum[i] += s;
      count[i] += 1;
      score[i] = sum[i] / static_cast<double>(count[i]);
    }
  }
  return score;
}

const std::vector<double>& stationary_distribution(NormId norm) {
  static std::mutex mu;
  static std::map<NormId, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(norm);
  if (it == cache.end()) {
    Rng rng(0x5eed0000u + static_cast<unsigned>(norm));
    it = cache.emplace(norm, warmup_stationary(norm, WarmupOptions{}, rng)).first;
  }
  return it->second;
}

}  // namespace rg
