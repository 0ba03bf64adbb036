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

#include <span>
#include <vector>

#include "rg/autodiff.h"

namespace rg {

enum class Activation { kTanh, kSigmoid, kIdentity };

// Small dense MLP with tanh hidden layers. Parameters live in blocks
// W0, b0, W1, b1, ... so that each layer maps to one ParamBlock pair.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(int arity, std::vector<int> hidden, Activation output = Activation::kSigmoid);

  // PyTorch-style default: every entry ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init_uniform(Rng& rng);

  int arity() const { return arity_; }
  int param_count() const { return param_count_; }
  int layer_count() const { return static_cast<int>(blocks_.size() / 2); }
  const std::vector<int>& widths() const { return widths_; }
  Activation output_activation() const { return output_; }

  std::vector<ParamBlock>& blocks() { return blocks_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  std::vector<double> flat() const;
  void set_flat(std::span<const double> theta);

  // Plain evaluation. Throws std::invalid_argument on arity mismatch.
  double eval(std::span<const double> x) const;
  // Evaluation plus the full local gradient of the scalar output. Either
  // output pointer may be null. dparams uses the flat() layout.
  double eval_grad(std::span<const double> x, double* dparams, double* dx) const;

  // Fused tape node: one node whose parents are the inputs and, when
  // `params` is given, every parameter leaf. Without `params` the weights
  // act as constants and only the input path is differentiable.
  Var forward(Tape& tape, std::span<const Var> x, const std::vector<BoundBlock>* params = nullptr) const;
  // Same function composed from matvec / tanh / sigmoid primitives.
  Var forward_composed(Tape& tape, std::span<const Var> x, const std::vector<BoundBlock>& params) const;

  std::vector<BoundBlock> bind(Tape& tape) const;

 private:
  int arity_ = 0;
  std::vector<int> widths_;  // input, hidden..., output (=1)
  Activation output_ = Activation::kSigmoid;
  std::vector<ParamBlock> blocks_;
  std::vector<int> poff_;  // flat offset of each layer's W
  int param_count_ = 0;
};

// Flat gradient across the blocks returned by PolicyNet::bind.
std::vector<double> flatten_grads(const std::vector<std::vector<double>>& per_block);

// One Adam state over all parameters of a net.
struct NetOptimizer {
  AdamState state;
  NetOptimizer() = default;
  NetOptimizer(const PolicyNet& net, double lr) : state(static_cast<std::size_t>(net.param_count()), lr) {}
  void step(PolicyNet& net, std::span<const double> grad, bool maximize);
};

// Sample standard deviation over the 21-point grid {0, 0.05, ..., 1} along
// the first input; a second input, when present, is pinned to 0.5.
double profile_std(const PolicyNet& net);
std::vector<double> profile(const PolicyNet& net, int points = 21);
double sample_std(std::span<const double> v);

}  // namespace rg
