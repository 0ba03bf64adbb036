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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "rg/expkit.h"
#include "rg/report.h"

namespace rg {
namespace {

namespace fs = std::filesystem;

ExperimentSpec tiny(const std::string& extra = "") {
  return parse_spec(
      "setting = tiny\n"
      "opponents = L6, AllD(L3)\n"
      "init = uniform\n"
      "learner.train = action\n"
      "learner.fixed_rule = identity\n"
      "lr_action = 1e-2\n"
      "t_outer = 3\n"
      "n_train = 2\n"
      "batch = 2\n"
      "eval.episodes = 2\n"
      "eval.final_episodes = 4\n"
      "seeds = 0,1\n" +
      extra);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rg_expkit_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Pool, Counts) {
  EXPECT_EQ(pool_counts(5, 0.2), std::make_pair(1, 3));
  EXPECT_EQ(pool_counts(5, 0.3), std::make_pair(1, 3));
  EXPECT_EQ(pool_counts(30, 0.8), std::make_pair(23, 6));
  EXPECT_EQ(pool_counts(5, 0.01).first, 1);
  EXPECT_EQ(pool_counts(5, 0.99).second, 1);
  EXPECT_THROW(pool_counts(5, 0.0), std::invalid_argument);
}

TEST(Spec, TextRoundTrip) {
  for (const auto& e : fs::directory_iterator(fs::path(RG_SOURCE_DIR) / "configs")) {
    const std::string name = e.path().stem().string();
    if (name == "warmup" || name == "demo") continue;
    const ExperimentSpec s = load_spec(e.path().string());
    EXPECT_NO_THROW(s.validate()) << name;
    EXPECT_EQ(to_text(parse_spec(to_text(s))), to_text(s)) << name;
    EXPECT_NO_THROW(with_fast(s).validate()) << name;
  }
}

TEST(Spec, UnknownKeyRejected) {
  ExperimentSpec s;
  EXPECT_THROW(apply_spec_key(s, "no.such.key", "1"), std::invalid_argument);
}

TEST(Spec, ReferencePayoffs) {
  ExperimentSpec s = parse_spec("opponents = L6, L6\n");
  EXPECT_DOUBLE_EQ(s.reference_payoff(), 4.5);
  s = parse_spec("opponents = ProudCoop(L3), AllD(L3)\n");
  EXPECT_DOUBLE_EQ(s.reference_payoff(), 2.25);
  s = parse_spec("opponents = ProudCoop(L3), AllD(L3)\ncost = 5\n");
  EXPECT_DOUBLE_EQ(s.reference_payoff(), 1.25);
  s = parse_spec("kind = pd\nopponents = L6, L6\n");
  EXPECT_DOUBLE_EQ(s.reference_payoff(), 3.0);
  s = parse_spec("opponents = L6, L6\nreference = 7\n");
  EXPECT_DOUBLE_EQ(s.reference_payoff(), 7.0);
}

TEST(Metrics, CsvRoundTrip) {
  std::vector<MetricRow> rows(2);
  rows[0] = MetricRow{1, 3, 2.125, std::nullopt, 0.25, 0.5, 1e-3, 2e-4, std::nullopt};
  rows[1] = MetricRow{2, 3, 2.0 / 3.0, 0.1 + 0.2, 1.0 / 7.0, 0.0, 3.5, 0.0, 1e-9};
  std::stringstream ss;
  write_metrics_csv(ss, rows);
  EXPECT_EQ(read_metrics_csv(ss), rows);
}

TEST(Demo, GradientsAgree) {
  const DemoReport r = demo_verify();
  EXPECT_TRUE(r.passed());
  EXPECT_GT(r.weights_checked, 0);
  EXPECT_EQ(r.tape_grad.size(), r.fd_grad.size());
}

TEST(Run, SeedsAreIsolated) {
  const ExperimentResult both = run_experiment(tiny());
  ExperimentSpec only = tiny();
  const SeedResult alone = run_seed(only, 1);
  ASSERT_EQ(both.seeds.size(), 2u);
  EXPECT_EQ(both.seeds[1].rows, alone.rows);
  EXPECT_EQ(both.seeds[1].checkpoint, alone.checkpoint);
  EXPECT_EQ(both.seeds[1].final_payoff, alone.final_payoff);
  EXPECT_EQ(both.seeds[0].rows.size(), 3u);
}

TEST(Run, BestCheckpointReportsTheBestIteration) {
  const SeedResult r = run_seed(tiny("best_checkpoint = true\nt_outer = 4\n"), 0);
  double best = -1e9;
  int at = -1;
  for (const MetricRow& m : r.rows) {
    if (m.payoff_real > best) {
      best = m.payoff_real;
      at = m.outer_iter;
    }
  }
  EXPECT_EQ(r.reported_iter, at);
}

TEST(Sweep, ExpandsCartesianProduct) {
  std::vector<std::vector<std::pair<std::string, std::string>>> assignments;
  const std::vector<ExperimentSpec> specs =
      expand_sweep(tiny(), {{"batch", {"1", "2"}}, {"lr_action", {"1e-3", "1e-2", "1e-1"}}}, &assignments);
  ASSERT_EQ(specs.size(), 6u);
  EXPECT_EQ(assignments[1][1].second, "1e-2");
  EXPECT_EQ(specs[4].protocol.batch, 2);
  EXPECT_DOUBLE_EQ(specs[4].protocol.lr_action, 1e-2);
}

TEST(Report, SingleSeedHasZeroSpread) {
  ExperimentSpec s = tiny("seeds = 0\n");
  const ExperimentResult r = run_experiment(s);
  const SettingSummary sum = summarize(r);
  EXPECT_EQ(sum.seeds, 1);
  EXPECT_EQ(sum.std_payoff, 0.0);
  EXPECT_DOUBLE_EQ(sum.mean_payoff, r.seeds[0].final_payoff);
}

TEST(Report, IdenticalRunsWriteIdenticalBytes) {
  const fs::path a = scratch("a"), b = scratch("b");
  write_run(a.string(), run_experiment(tiny()));
  write_run(b.string(), run_experiment(tiny()));
  for (const char* f : {"metrics.csv", "seeds.csv", "summary.md", "spec.cfg", "learning_curve.svg"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_FALSE(slurp(a / f).empty()) << f;
  }
  const ExperimentResult back = read_run(a.string());
  ASSERT_EQ(back.seeds.size(), 2u);
  const std::vector<SettingSummary> all = report_dir(a.parent_path().string() + "/" + a.filename().string());
  EXPECT_FALSE(all.empty());
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace
}  // namespace rg
