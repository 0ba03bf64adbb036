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

#include "rg/policy_net.h"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rg {

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative expressed through the activation value.
double activate_grad(Activation a, double v) {
  switch (a) {
    case Activation::kTanh: return 1.0 - v * v;
    case Activation::kSigmoid: return v * (1.0 - v);
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

// Per-thread scratch so the hot path never allocates.
struct Scratch {
  std::vector<double> acts;   // concatenated layer values, input first
  std::vector<double> delta;  // backprop buffer
  std::vector<double> next;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

PolicyNet::PolicyNet(int arity, std::vector<int> hidden, Activation output)
    : arity_(arity), output_(output) {
  if (arity <= 0) throw std::invalid_argument("PolicyNet: arity must be positive");
  widths_.push_back(arity);
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("PolicyNet: hidden width must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(1);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    blocks_.emplace_back(widths_[l + 1], widths_[l]);
    blocks_.emplace_back(widths_[l + 1], 1);
    poff_.push_back(param_count_);
    param_count_ += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
}

void PolicyNet::init_uniform(Rng& rng) {
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& w : blocks_[2 * l].data) w = u(rng);
    for (double& b : blocks_[2 * l + 1].data) b = u(rng);
  }
}

std::vector<double> PolicyNet::flat() const {
  std::vector<double> out;
  out.reserve(param_count_);
  for (const ParamBlock& b : blocks_) out.insert(out.end(), b.data.begin(), b.data.end());
  return out;
}

void PolicyNet::set_flat(std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != param_count_) throw std::invalid_argument("set_flat: size mismatch");
  std::size_t k = 0;
  for (ParamBlock& b : blocks_) {
    for (double& x : b.data) x = theta[k++];
  }
}

double PolicyNet::eval(std::span<const double> x) const {
  return eval_grad(x, nullptr, nullptr);
}

double PolicyNet::eval_grad(std::span<const double> x, double* dparams, double* dx) const {
  if (static_cast<int>(x.size()) != arity_) throw std::invalid_argument("PolicyNet: arity mismatch");
  Scratch& s = scratch();
  const int layers = static_cast<int>(widths_.size()) - 1;
  // Offsets of each layer's values inside s.acts.
  int total = 0;
  for (int w : widths_) total += w;
  if (static_cast<int>(s.acts.size()) < total) s.acts.resize(total);
  double* a = s.acts.data();
  for (int k = 0; k < arity_; ++k) a[k] = x[k];
  int in_off = 0;
  for (int l = 0; l < layers; ++l) {
    const int nin = widths_[l];
    const int nout = widths_[l + 1];
    const ParamBlock& W = blocks_[2 * l];
    const ParamBlock& b = blocks_[2 * l + 1];
    const Activation act = (l + 1 == layers) ? output_ : Activation::kTanh;
    double* out = a + in_off + nin;
    const double* in = a + in_off;
    for (int r = 0; r < nout; ++r) {
      const double* wr = W.data.data() + static_cast<std::size_t>(r) * nin;
      double z = b.data[r];
      for (int c = 0; c < nin; ++c) z += wr[c] * in[c];
      out[r] = activate(act, z);
    }
    in_off += nin;
  }
  const double y = a[in_off];
  if (dparams == nullptr && dx == nullptr) return y;

  // Reverse sweep for the scalar output. delta holds d y / d z for the
  // current layer's pre-activations.
  int max_w = 0;
  for (int w : widths_) max_w = std::max(max_w, w);
  if (static_cast<int>(s.delta.size()) < max_w) {
    s.delta.resize(max_w);
    s.next.resize(max_w);
  }
  double* delta = s.delta.data();
  double* next = s.next.data();
  delta[0] = activate_grad(output_, y);
  int out_off = in_off;
  for (int l = layers - 1; l >= 0; --l) {
    const int nin = widths_[l];
    const int nout = widths_[l + 1];
    const int lin_off = out_off - nin;
    const double* in = a + lin_off;
    const ParamBlock& W = blocks_[2 * l];
    if (dparams != nullptr) {
      double* dW = dparams + poff_[l];
      double* db = dW + nout * nin;
      for (int r = 0; r < nout; ++r) {
        for (int c = 0; c < nin; ++c) dW[r * nin + c] = delta[r] * in[c];
        db[r] = delta[r];
      }
    }
    if (l > 0 || dx != nullptr) {
      for (int c = 0; c < nin; ++c) {
        double g = 0.0;
        for (int r = 0; r < nout; ++r) g += delta[r] * W.data[static_cast<std::size_t>(r) * nin + c];
        next[c] = g;
      }
      if (l > 0) {
        for (int c = 0; c < nin; ++c) next[c] *= activate_grad(Activation::kTanh, in[c]);
        std::swap(delta, next);
      } else {
        for (int c = 0; c < nin; ++c) dx[c] = next[c];
      }
    }
    out_off = lin_off;
  }
  return y;
}

std::vector<BoundBlock> PolicyNet::bind(Tape& tape) const {
  std::vector<BoundBlock> out;
  out.reserve(blocks_.size());
  for (const ParamBlock& b : blocks_) out.push_back(rg::bind(tape, b));
  return out;
}

Var PolicyNet::forward(Tape& tape, std::span<const Var> x, const std::vector<BoundBlock>* params) const {
  if (static_cast<int>(x.size()) != arity_) throw std::invalid_argument("PolicyNet: arity mismatch");
  thread_local std::vector<double> xs, partials;
  thread_local std::vector<int> ids;
  xs.resize(arity_);
  for (int k = 0; k < arity_; ++k) xs[k] = x[k].value();
  const bool with_params = params != nullptr && tape.recording();
  bool any_input = false;
  for (int k = 0; k < arity_; ++k) any_input = any_input || x[k].requires_grad();
  const int n = arity_ + (with_params ? param_count_ : 0);
  partials.resize(n);
  ids.resize(n);
  double y;
  if (!tape.recording() || (!with_params && !any_input)) {
    y = eval(xs);
    return tape.constant(y);
  }
  y = eval_grad(xs, with_params ? partials.data() + arity_ : nullptr, partials.data());
  for (int k = 0; k < arity_; ++k) ids[k] = x[k].id;
  if (with_params) {
    int k = arity_;
    for (const BoundBlock& b : *params) {
      for (int e = 0; e < b.size(); ++e) ids[k++] = b.first + e;
    }
  }
  return tape.push(y, ids.data(), partials.data(), n);
}

Var PolicyNet::forward_composed(Tape& /*tape*/, std::span<const Var> x, const std::vector<BoundBlock>& params) const {
  if (static_cast<int>(x.size()) != arity_) throw std::invalid_argument("PolicyNet: arity mismatch");
  std::vector<Var> h(x.begin(), x.end());
  const int layers = static_cast<int>(widths_.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    std::vector<Var> z = matvec(params[2 * l], h, params[2 * l + 1]);
    const Activation act = (l + 1 == layers) ? output_ : Activation::kTanh;
    for (Var& v : z) {
      if (act == Activation::kTanh) v = tanh(v);
      else if (act == Activation::kSigmoid) v = sigmoid(v);
    }
    h = std::move(z);
  }
  return h[0];
}

std::vector<double> flatten_grads(const std::vector<std::vector<double>>& per_block) {
  std::vector<double> out;
  for (const auto& g : per_block) out.insert(out.end(), g.begin(), g.end());
  return out;
}

void NetOptimizer::step(PolicyNet& net, std::span<const double> grad, bool maximize) {
  std::vector<double> theta = net.flat();
  adam_step(std::span<double>(theta), grad, state, maximize);
  net.set_flat(theta);
}

std::vector<double> profile(const PolicyNet& net, int points) {
  std::vector<double> out;
  out.reserve(points);
  std::vector<double> x(net.arity(), 0.5);
  for (int k = 0; k < points; ++k) {
    x[0] = static_cast<double>(k) / (points - 1);
    out.push_back(net.eval(x));
  }
  return out;
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double profile_std(const PolicyNet& net) {
  const std::vector<double> p = profile(net, 21);
  return sample_std(p);
}

}  // namespace rg
