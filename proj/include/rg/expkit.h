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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rg/config.h"
#include "rg/learner.h"

namespace rg {

// One row per (outer iteration, seed).
struct MetricRow {
  int outer_iter = 0;
  std::uint64_t seed = 0;
  double payoff_real = 0.0;
  std::optional<double> payoff_virtual;
  double std_action = 0.0;
  double std_signal = 0.0;
  double grad_action = 0.0;  // mean over the iteration's updates
  double grad_signal = 0.0;
  std::optional<double> surrogate_mse;  // worst grid MSE over modeled opponents

  bool operator==(const MetricRow&) const = default;
};

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(std::istream& is);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  // Reported policy: the best checkpoint when requested, else the last one.
  double final_payoff = 0.0;
  double std_action = 0.0;
  double std_signal = 0.0;
  int reported_iter = 0;
  std::vector<double> profile_action;  // 21-point grids of the reported policy
  std::vector<double> profile_signal;
  std::string checkpoint;  // text checkpoint of the reported policy
  // Ratio of summed signal to summed action gradient norms over training.
  double grad_ratio = 0.0;
};

inline constexpr double kDiscriminativeThreshold = 0.2;

// Profile std >= kDiscriminativeThreshold on every trained net.
bool discriminative(const SeedResult& r, const LearnerSpec& spec);

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<SeedResult> seeds;

  double mean_payoff() const;
  double std_payoff() const;  // sample std, 0 for a single seed
  int discriminative_count() const;
};

// Progress callback: (seed, row) after every outer iteration.
using ProgressFn = std::function<void(const MetricRow&)>;

SeedResult run_seed(const ExperimentSpec& spec, std::uint64_t seed, const ProgressFn& progress = {});
// Validates first, then runs every seed in protocol order.
ExperimentResult run_experiment(const ExperimentSpec& spec, const ProgressFn& progress = {});

// One cell of a sweep: the axis assignments and the result.
struct SweepCell {
  std::vector<std::pair<std::string, std::string>> assignment;
  ExperimentResult result;
};

// Cartesian product over the axes, in the given axis order with the last
// axis varying fastest. An axis named "p" sets pool.p.
std::vector<SweepCell> sweep(const ExperimentSpec& base,
                             const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
                             const ProgressFn& progress = {});
std::vector<ExperimentSpec> expand_sweep(
    const ExperimentSpec& base, const std::vector<std::pair<std::string, std::vector<std::string>>>& axes,
    std::vector<std::vector<std::pair<std::string, std::string>>>* assignments = nullptr);

// Three-agent fixture: N=3, T=3, b=2, c=1, window 1, matching (0,2), (1,0),
// (0,1). Checks tape gradients of agent 0's return against forward finite
// differences on every weight of agent 0's action net.
struct DemoReport {
  double max_abs_error = 0.0;
  int weights_checked = 0;
  double episode_return = 0.0;
  std::vector<double> tape_grad;
  std::vector<double> fd_grad;
  bool passed() const { return max_abs_error < 1e-3; }
};

DemoReport demo_verify(std::uint64_t seed = 0, double eps = 1e-4);

}  // namespace rg
