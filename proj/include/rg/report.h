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

#include <iosfwd>
#include <string>
#include <vector>

#include "rg/expkit.h"

namespace rg {

struct SettingSummary {
  std::string setting;
  int seeds = 0;
  double mean_payoff = 0.0;
  double std_payoff = 0.0;
  double reference = 0.0;
  double percent_of_reference = 0.0;
  int discriminative = 0;
  double mean_std_action = 0.0;
  double mean_std_signal = 0.0;
};

SettingSummary summarize(const ExperimentResult& result);

// Markdown table, one row per setting.
std::string summary_markdown(const std::vector<SettingSummary>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SettingSummary>& rows);

// Real-environment payoff per outer iteration, one line per seed, with the
// reference as a dashed line.
std::string learning_curve_svg(const ExperimentResult& result);
// 21-point profiles of the reported policies, one line per seed.
std::string profile_svg(const ExperimentResult& result, bool signal);

// Run directory: spec.cfg, metrics.csv, seeds.csv, summary.md, plots and
// one checkpoint per seed.
void write_run(const std::string& dir, const ExperimentResult& result);
ExperimentResult read_run(const std::string& dir);

// Summaries of every run directory directly below `root` (or of `root`
// itself when it is a run directory). Writes summary.md and summary.csv
// into `root` and returns the rows.
std::vector<SettingSummary> report_dir(const std::string& root);

}  // namespace rg
