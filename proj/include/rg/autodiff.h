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

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rg {

using Rng = std::mt19937_64;

double uniform01(Rng& rng);
double normal(Rng& rng, double mean = 0.0, double stddev = 1.0);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive bounds

class Tape;

// Handle to one node of a tape. Cheap to copy; valid while the tape lives
// and has not been cleared.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  double value() const;
  bool requires_grad() const;
};

// Append-only arena of scalar nodes. Node ids are assigned in creation order,
// which is also a topological order, so backward is a single reverse sweep.
//
// A node only stores parents that carry gradient. If none of its operands
// does, it is recorded as a constant, which keeps oracle rollouts small: the
// parts of an episode that do not depend on trainable parameters never grow
// the parent arrays.
class Tape {
 public:
  // record=false gives a no-grad tape: values are computed, parents dropped.
  explicit Tape(bool record = true);

  void clear();
  bool recording() const { return record_; }
  int size() const { return static_cast<int>(value_.size()); }

  Var constant(double v);
  Var leaf(double v);

  double value(int id) const { return value_[id]; }
  bool requires_grad(int id) const { return grad_[id] != 0; }

  Var push(double v, std::initializer_list<std::pair<Var, double>> parents);
  // Raw form used by fused nodes. Entries with id < 0 are skipped.
  Var push(double v, const int* ids, const double* partials, int n);

  // Adjoint of every node with respect to `root`.
  std::vector<double> adjoints(Var root) const;
  // Number of stored (parent, partial) entries; useful for profiling tests.
  std::size_t edge_count() const { return parent_.size(); }

 private:
  bool record_;
  std::vector<double> value_;
  std::vector<std::uint8_t> grad_;
  std::vector<int> begin_;
  std::vector<int> parent_;
  std::vector<double> partial_;
};

enum class OpKind {
  kAdd, kSub, kMul, kDiv, kNeg, kTanh, kSigmoid, kExp, kLog, kPow, kMin, kMax
};

// Elementary operation with exact local partials. Throws std::domain_error
// on non-finite operands, division by zero, log of a non-positive value and
// pow with a non-positive base and a differentiable exponent.
Var var_op(OpKind kind, Var a, Var b = Var{});

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var pow(Var a, Var b);
Var min(Var a, Var b);
Var max(Var a, Var b);

// sum_k w_k * v_k as a single node.
Var weighted_sum(Tape& tape, std::span<const Var> vars, std::span<const double> weights);

// Dense parameter storage for one layer (weights or bias). On a tape the
// entries become leaves through bind().
struct ParamBlock {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  ParamBlock() = default;
  ParamBlock(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
  int size() const { return rows * cols; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// A ParamBlock placed on a tape: contiguous node ids [first, first+size).
struct BoundBlock {
  Tape* tape = nullptr;
  int first = -1;
  int rows = 0;
  int cols = 0;
  bool trainable = false;

  Var at(int r, int c) const { return Var{tape, first + r * cols + c}; }
  int size() const { return rows * cols; }
};

BoundBlock bind(Tape& tape, const ParamBlock& block);
BoundBlock bind_constant(Tape& tape, const ParamBlock& block);

// y = W x + b with W (rows x cols), b (rows x 1).
std::vector<Var> matvec(const BoundBlock& w, std::span<const Var> x, const BoundBlock& b);

// Gradient of `root` with respect to every entry of each bound block.
std::vector<std::vector<double>> backward(Var root, std::span<const BoundBlock> wrt);
// Vector-root overload; only a single-element root is accepted.
std::vector<std::vector<double>> backward(std::span<const Var> root,
                                          std::span<const BoundBlock> wrt);

using ScalarFn = std::function<double(const ParamBlock&)>;

// Forward difference (f(p + eps e_i) - f(p)) / eps.
double finite_diff(const ScalarFn& f, const ParamBlock& p, int index, double eps);
double central_diff(const ScalarFn& f, const ParamBlock& p, int index, double eps);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double lr_) : m(n, 0.0), v(n, 0.0), lr(lr_) {}
};

// Bias-corrected Adam. maximize=true ascends. Throws std::domain_error naming
// the first non-finite gradient entry.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               bool maximize);
void adam_step(ParamBlock& params, std::span<const double> grads, AdamState& state, bool maximize);

// sigmoid((logit + g1 - g2) / tau) with g = -log(-log(u)). hard=true snaps
// the forward value to {0, 1} and keeps the soft partial.
Var gumbel_sigmoid(Var logit, double tau, Rng& rng, bool hard);

}  // namespace rg
