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

#include <optional>
#include <string>
#include <vector>

#include "rg/autodiff.h"
#include "rg/game.h"

namespace rg {

// Spin-mapped relaxation of a second-order norm.
struct NormParams {
  NormId norm = NormId::kL3;
  double beta = 5.0;
};

// Assessment of a donor action x given the recipient's score y.
//   L6:       (1 + tanh(b(x-.5)) tanh(b(y-.5))) / 2
//   L3:       1 - (1 - tanh(b(x-.5))) (1 + tanh(b(y-.5))) / 4
//   identity: x
double dsmn_signal(const NormParams& p, double x, double y);
Var dsmn_signal(const NormParams& p, Var x, Var y);

// (1 + tanh(b(recipient-.5))) / 2 for L3 and L6, the recipient score itself
// for identity. own_score is accepted but does not enter.
double dsmn_action(const NormParams& p, double recipient_score, double own_score);
Var dsmn_action(const NormParams& p, Var recipient_score, Var own_score);

enum class FixedKind { kL3, kL6, kIdentity, kAllDefector, kProudCoop, kHybridCoop };

struct FixedAgentSpec {
  FixedKind kind = FixedKind::kL3;
  // Signal rule. L3 / L6 / identity kinds default to their own rule.
  std::optional<NormId> signal_norm;
  double beta = 5.0;
  double gain = 10.0;      // proud-coop / hybrid-coop logistic gain
  double midpoint = 0.5;

  void validate() const;
  NormId effective_signal_norm() const;
  // Number of inputs the action rule actually depends on (1 or 2).
  int action_arity() const;
};

// "L3", "L6", "identity", "AllD(L3)", "ProudCoop(L3)", "HybridCoop(L6)", ...
std::string to_string(const FixedAgentSpec& spec);
FixedAgentSpec parse_fixed_agent(const std::string& s);
// Comma separated list with optional repeat counts: "HybridCoop(L3), AllD(L3)x2".
std::vector<FixedAgentSpec> parse_fixed_agents(const std::string& s);

double fixed_action(const FixedAgentSpec& spec, double recipient_score, double own_score);
Var fixed_action(const FixedAgentSpec& spec, Tape& tape, Var recipient_score, Var own_score);
double fixed_signal(const FixedAgentSpec& spec, double donor_action, double own_score);
Var fixed_signal(const FixedAgentSpec& spec, Tape& tape, Var donor_action, Var own_score);

class FixedAgent : public Agent {
 public:
  explicit FixedAgent(FixedAgentSpec spec) : spec_(spec) { spec_.validate(); }
  Var act(Tape& tape, Var recipient_score, Var own_score) override;
  Var signal(Tape& tape, Var donor_action, Var own_score) override;
  const FixedAgentSpec& spec() const { return spec_; }

 private:
  FixedAgentSpec spec_;
};

struct WarmupOptions {
  int n_agents = 100;
  int rounds = 5000;
  double exec_noise = 0.05;
  double assess_noise = 0.05;
  double beta = 5.0;
};

// Homogeneous population under one norm. Each round every agent donates
// once to a uniformly drawn partner; actions and signals get clamped
// Gaussian noise; scores are running means from a uniform start. Returns the
// scores after the last round.
std::vector<double> warmup_stationary(NormId norm, const WarmupOptions& options, Rng& rng);

// Process-wide cached pool from warmup_stationary with default options and a
// fixed seed. Thread-safe.
const std::vector<double>& stationary_distribution(NormId norm);

}  // namespace rg
