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

#include "rg/autodiff.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rg {

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

double normal(Rng& rng, double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double Var::value() const { return tape->value(id); }
bool Var::requires_grad() const { return tape->requires_grad(id); }

Tape::Tape(bool record) : record_(record) { begin_.push_back(0); }

void Tape::clear() {
  value_.clear();
  grad_.clear();
  begin_.assign(1, 0);
  parent_.clear();
  partial_.clear();
}

Var Tape::constant(double v) {
  value_.push_back(v);
  grad_.push_back(0);
  begin_.push_back(static_cast<int>(parent_.size()));
  return Var{this, size() - 1};
}

Var Tape::leaf(double v) {
  value_.push_back(v);
  grad_.push_back(record_ ? 1 : 0);
  begin_.push_back(static_cast<int>(parent_.size()));
  return Var{this, size() - 1};
}

Var Tape::push(double v, std::initializer_list<std::pair<Var, double>> parents) {
  bool any = false;
  if (record_) {
    for (const auto& [p, d] : parents) {
      if (grad_[p.id]) {
        parent_.push_back(p.id);
        partial_.push_back(d);
        any = true;
      }
    }
  }
  value_.push_back(v);
  grad_.push_back(any ? 1 : 0);
  begin_.push_back(static_cast<int>(parent_.size()));
  return Var{this, size() - 1};
}

Var Tape::push(double v, const int* ids, const double* partials, int n) {
  bool any = false;
  if (record_) {
    for (int k = 0; k < n; ++k) {
      const int id = ids[k];
      if (id >= 0 && grad_[id]) {
        parent_.push_back(id);
        partial_.push_back(partials[k]);
        any = true;
      }
    }
  }
  value_.push_back(v);
  grad_.push_back(any ? 1 : 0);
  begin_.push_back(static_cast<int>(parent_.size()));
  return Var{this, size() - 1};
}

std::vector<double> Tape::adjoints(Var root) const {
  if (root.tape != this) throw std::invalid_argument("backward: root belongs to another tape");
  std::vector<double> adj(value_.size(), 0.0);
  adj[root.id] = 1.0;
  for (int n = root.id; n >= 0; --n) {
    const double g = adj[n];
    if (g == 0.0) continue;
    for (int k = begin_[n]; k < begin_[n + 1]; ++k) adj[parent_[k]] += g * partial_[k];
  }
  return adj;
}

namespace {

void check_finite(Var a, const char* what) {
  if (!std::isfinite(a.value())) throw std::domain_error(std::string(what) + ": non-finite operand");
}

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr) throw std::invalid_argument("var_op: operand is not on a tape");
  if (b.tape != nullptr && b.tape != a.tape) throw std::invalid_argument("var_op: operands on different tapes");
  return *a.tape;
}

}  // namespace

Var var_op(OpKind kind, Var a, Var b) {
  Tape& t = tape_of(a, b);
  const bool binary = kind == OpKind::kAdd || kind == OpKind::kSub || kind == OpKind::kMul ||
                      kind == OpKind::kDiv || kind == OpKind::kPow || kind == OpKind::kMin ||
                      kind == OpKind::kMax;
  if (binary && b.tape == nullptr) throw std::invalid_argument("var_op: binary op needs two operands");
  check_finite(a, "var_op");
  if (binary) check_finite(b, "var_op");
  const double x = a.value();
  const double y = binary ? b.value() : 0.0;
  switch (kind) {
    case OpKind::kAdd: return t.push(x + y, {{a, 1.0}, {b, 1.0}});
    case OpKind::kSub: return t.push(x - y, {{a, 1.0}, {b, -1.0}});
    case OpKind::kMul: return t.push(x * y, {{a, y}, {b, x}});
    case OpKind::kDiv:
      if (y == 0.0) throw std::domain_error("div: division by zero");
      return t.push(x / y, {{a, 1.0 / y}, {b, -x / (y * y)}});
    case OpKind::kNeg: return t.push(-x, {{a, -1.0}});
    case OpKind::kTanh: {
      const double v = std::tanh(x);
      return t.push(v, {{a, 1.0 - v * v}});
    }
    case OpKind::kSigmoid: {
      const double v = 1.0 / (1.0 + std::exp(-x));
      return t.push(v, {{a, v * (1.0 - v)}});
    }
    case OpKind::kExp: {
      const double v = std::exp(x);
      return t.push(v, {{a, v}});
    }
    case OpKind::kLog:
      if (x <= 0.0) throw std::domain_error("log: non-positive operand");
      return t.push(std::log(x), {{a, 1.0 / x}});
    case OpKind::kPow: {
      if (x <= 0.0 && b.requires_grad()) throw std::domain_error("pow: non-positive base with differentiable exponent");
      if (x == 0.0 && y < 1.0) throw std::domain_error("pow: zero base with exponent below one");
      const double v = std::pow(x, y);
      if (!std::isfinite(v)) throw std::domain_error("pow: non-finite result");
      const double dx = (x == 0.0) ? (y == 1.0 ? 1.0 : 0.0) : y * std::pow(x, y - 1.0);
      const double dy = (x > 0.0) ? v * std::log(x) : 0.0;
      return t.push(v, {{a, dx}, {b, dy}});
    }
    // Ties route the gradient to the first operand.
    case OpKind::kMin: return x <= y ? t.push(x, {{a, 1.0}}) : t.push(y, {{b, 1.0}});
    case OpKind::kMax: return x >= y ? t.push(x, {{a, 1.0}}) : t.push(y, {{b, 1.0}});
  }
  throw std::invalid_argument("var_op: unknown kind");
}

Var operator+(Var a, Var b) { return var_op(OpKind::kAdd, a, b); }
Var operator-(Var a, Var b) { return var_op(OpKind::kSub, a, b); }
Var operator*(Var a, Var b) { return var_op(OpKind::kMul, a, b); }
Var operator/(Var a, Var b) { return var_op(OpKind::kDiv, a, b); }
Var operator-(Var a) { return var_op(OpKind::kNeg, a); }
Var operator+(Var a, double b) { return a.tape->push(a.value() + b, {{a, 1.0}}); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, double b) { return a.tape->push(a.value() - b, {{a, 1.0}}); }
Var operator-(double a, Var b) { return b.tape->push(a - b.value(), {{b, -1.0}}); }
Var operator*(Var a, double b) { return a.tape->push(a.value() * b, {{a, b}}); }
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, double b) {
  if (b == 0.0) throw std::domain_error("div: division by zero");
  return a.tape->push(a.value() / b, {{a, 1.0 / b}});
}
Var tanh(Var a) { return var_op(OpKind::kTanh, a); }
Var sigmoid(Var a) { return var_op(OpKind::kSigmoid, a); }
Var exp(Var a) { return var_op(OpKind::kExp, a); }
Var log(Var a) { return var_op(OpKind::kLog, a); }
Var pow(Var a, Var b) { return var_op(OpKind::kPow, a, b); }
Var min(Var a, Var b) { return var_op(OpKind::kMin, a, b); }
Var max(Var a, Var b) { return var_op(OpKind::kMax, a, b); }

Var weighted_sum(Tape& tape, std::span<const Var> vars, std::span<const double> weights) {
  if (vars.size() != weights.size()) throw std::invalid_argument("weighted_sum: size mismatch");
  double v = 0.0;
  thread_local std::vector<int> ids;
  ids.resize(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) {
    v += weights[k] * vars[k].value();
    ids[k] = vars[k].id;
  }
  return tape.push(v, ids.data(), weights.data(), static_cast<int>(vars.size()));
}

BoundBlock bind(Tape& tape, const ParamBlock& block) {
  BoundBlock out{&tape, tape.size(), block.rows, block.cols, true};
  for (double x : block.data) tape.leaf(x);
  return out;
}

BoundBlock bind_constant(Tape& tape, const ParamBlock& block) {
  BoundBlock out{&tape, tape.size(), block.rows, block.cols, false};
  for (double x : block.data) tape.constant(x);
  return out;
}

std::vector<Var> matvec(const BoundBlock& w, std::span<const Var> x, const BoundBlock& b) {
  if (static_cast<int>(x.size()) != w.cols || b.rows != w.rows || b.cols != 1) {
    throw std::invalid_argument("matvec: shape mismatch");
  }
  Tape& t = *w.tape;
  std::vector<Var> y;
  y.reserve(w.rows);
  std::vector<int> ids(2 * w.cols + 1);
  std::vector<double> partials(2 * w.cols + 1);
  for (int r = 0; r < w.rows; ++r) {
    double v = b.at(r, 0).value();
    int n = 0;
    for (int c = 0; c < w.cols; ++c) {
      const Var wv = w.at(r, c);
      v += wv.value() * x[c].value();
      ids[n] = wv.id;
      partials[n++] = x[c].value();
      ids[n] = x[c].id;
      partials[n++] = wv.value();
    }
    ids[n] = b.at(r, 0).id;
    partials[n++] = 1.0;
    y.push_back(t.push(v, ids.data(), partials.data(), n));
  }
  return y;
}

std::vector<std::vector<double>> backward(Var root, std::span<const BoundBlock> wrt) {
  const std::vector<double> adj = root.tape->adjoints(root);
  std::vector<std::vector<double>> out;
  out.reserve(wrt.size());
  for (const BoundBlock& b : wrt) {
    if (b.tape != root.tape) throw std::invalid_argument("backward: block bound to another tape");
    out.emplace_back(adj.begin() + b.first, adj.begin() + b.first + b.size());
  }
  return out;
}

std::vector<std::vector<double>> backward(std::span<const Var> root, std::span<const BoundBlock> wrt) {
  if (root.size() != 1) throw std::invalid_argument("backward: root must be a scalar");
  return backward(root[0], wrt);
}

double finite_diff(const ScalarFn& f, const ParamBlock& p, int index, double eps) {
  ParamBlock q = p;
  const double base = f(p);
  q.data.at(index) += eps;
  return (f(q) - base) / eps;
}

double central_diff(const ScalarFn& f, const ParamBlock& p, int index, double eps) {
  ParamBlock hi = p, lo = p;
  hi.data.at(index) += eps;
  lo.data.at(index) -= eps;
  return (f(hi) - f(lo)) / (2.0 * eps);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& s, bool maximize) {
  if (grads.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (!std::isfinite(grads[k])) {
      throw std::domain_error("adam_step: non-finite gradient at index " + std::to_string(k));
    }
  }
  s.step += 1;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  const double sign = maximize ? 1.0 : -1.0;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const double g = grads[k];
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * g;
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * g * g;
    const double mhat = s.m[k] / c1;
    const double vhat = s.v[k] / c2;
    params[k] += sign * s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void adam_step(ParamBlock& params, std::span<const double> grads, AdamState& state, bool maximize) {
  adam_step(std::span<double>(params.data), grads, state, maximize);
}

Var gumbel_sigmoid(Var logit, double tau, Rng& rng, bool hard) {
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sigmoid: tau must be positive");
  auto gumbel = [&rng]() {
    const double u = std::clamp(uniform01(rng), 1e-12, 1.0 - 1e-12);
    return -std::log(-std::log(u));
  };
  const double g1 = gumbel();
  const double g2 = gumbel();
  const double z = (logit.value() + g1 - g2) / tau;
  const double soft = 1.0 / (1.0 + std::exp(-z));
  const double d = soft * (1.0 - soft) / tau;
  const double v = hard ? (soft >= 0.5 ? 1.0 : 0.0) : soft;
  return logit.tape->push(v, {{logit, d}});
}

}  // namespace rg
