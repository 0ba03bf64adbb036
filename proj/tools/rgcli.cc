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

// Command-line front end: run, sweep, verify-demo, warmup, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rg/expkit.h"
#include "rg/opponents.h"
#include "rg/policy_net.h"
#include "rg/report.h"
#include "rg/strings.h"

namespace {

using namespace rg;

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + s + "'");
  return {trim(s.substr(0, eq)), trim(s.substr(eq + 1))};
}

ExperimentSpec load(const std::string& path, bool fast, const std::vector<std::string>& sets) {
  ExperimentSpec spec = load_spec(path);
  if (fast) spec = with_fast(spec);
  for (const std::string& s : sets) {
    const auto [k, v] = split_assignment(s);
    apply_spec_key(spec, k, v);
  }
  spec.validate();
  return spec;
}

ProgressFn printer(bool quiet) {
  if (quiet) return {};
  return [](const MetricRow& m) {
    std::printf("seed %llu iter %4d payoff %.4f std[pi] %.3f std[phi] %.3f", static_cast<unsigned long long>(m.seed),
                m.outer_iter, m.payoff_real, m.std_action, m.std_signal);
    if (m.payoff_virtual) std::printf(" virtual %.4f", *m.payoff_virtual);
    if (m.surrogate_mse) std::printf(" mse %.2e", *m.surrogate_mse);
    std::printf("\n");
    std::fflush(stdout);
  };
}

std::string axis_tag(const std::vector<std::pair<std::string, std::string>>& assignment) {
  std::string tag;
  for (const auto& [k, v] : assignment) tag += (tag.empty() ? "" : "_") + k + "=" + v;
  return tag;
}

std::map<std::string, std::string> small_config(const std::string& path) {
  std::map<std::string, std::string> out;
  if (path.empty()) return out;
  for (const auto& [k, v] : parse_key_values(read_file(path))) out[k] = v;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"recipgrad experiments"};
  app.require_subcommand(1);

  std::string config, out_dir, norm, report_root, small_cfg;
  bool fast = false, quiet = false;
  std::vector<std::string> sets, axes;
  std::uint64_t demo_seed = 0;
  double demo_eps = 1e-4;

  auto* run = app.add_subcommand("run", "train every seed of one setting");
  run->add_option("config", config, "setting file")->required()->check(CLI::ExistingFile);
  run->add_flag("--fast", fast, "apply the fast.* overrides");
  run->add_option("--out", out_dir, "run directory (default runs/<setting>)");
  run->add_option("--set", sets, "extra key=value overrides");
  run->add_flag("-q,--quiet", quiet);

  auto* sw = app.add_subcommand("sweep", "Cartesian sweep over spec keys");
  sw->add_option("config", config, "setting file")->required()->check(CLI::ExistingFile);
  sw->add_option("--axis", axes, "key=v1,v2,... (repeatable); 'p' means pool.p")->required();
  sw->add_flag("--fast", fast, "apply the fast.* overrides");
  sw->add_option("--out", out_dir, "sweep directory (default runs/<setting>_sweep)");
  sw->add_option("--set", sets, "extra key=value overrides");
  sw->add_flag("-q,--quiet", quiet);

  auto* demo = app.add_subcommand("verify-demo", "three-agent finite-difference check");
  demo->add_option("--config", small_cfg, "file with seed / eps")->check(CLI::ExistingFile);
  demo->add_option("--seed", demo_seed);
  demo->add_option("--eps", demo_eps);

  auto* warm = app.add_subcommand("warmup", "stationary reputation distribution of one norm");
  warm->add_option("norm", norm, "L3, L6 or identity")->required();
  warm->add_option("--config", small_cfg, "file with n_agents / rounds / noise / beta / seed")->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("report", "summarize run directories");
  rep->add_option("dir", report_root, "run directory or a directory of runs")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const ExperimentSpec spec = load(config, fast, sets);
      if (out_dir.empty()) out_dir = "runs/" + spec.setting + (fast ? "_fast" : "");
      const ExperimentResult result = run_experiment(spec, printer(quiet));
      write_run(out_dir, result);
      std::cout << summary_markdown({summarize(result)}) << "results in " << out_dir << "\n";
      return 0;
    }
    if (*sw) {
      const ExperimentSpec spec = load(config, fast, sets);
      std::vector<std::pair<std::string, std::vector<std::string>>> parsed;
      for (const std::string& a : axes) {
        const auto [k, v] = split_assignment(a);
        parsed.emplace_back(k, split(v, ','));
      }
      if (out_dir.empty()) out_dir = "runs/" + spec.setting + "_sweep";
      const std::vector<SweepCell> cells = sweep(spec, parsed, printer(quiet));
      for (const SweepCell& c : cells) {
        write_run((std::filesystem::path(out_dir) / axis_tag(c.assignment)).string(), c.result);
      }
      const auto rows = report_dir(out_dir);
      std::cout << summary_markdown(rows) << "results in " << out_dir << "\n";
      return 0;
    }
    if (*demo) {
      const auto cfg = small_config(small_cfg);
      if (cfg.count("seed") && !demo->count("--seed")) demo_seed = std::stoull(cfg.at("seed"));
      if (cfg.count("eps") && !demo->count("--eps")) demo_eps = parse_real(cfg.at("eps"));
      const DemoReport r = demo_verify(demo_seed, demo_eps);
      std::printf("weights checked %d\nreturn %.6f\nmax |tape - fd| %.3e\n%s\n", r.weights_checked, r.episode_return,
                  r.max_abs_error, r.passed() ? "PASS" : "FAIL");
      return r.passed() ? 0 : 1;
    }
    if (*warm) {
      const auto cfg = small_config(small_cfg);
      WarmupOptions o;
      std::uint64_t seed = 0;
      if (cfg.count("n_agents")) o.n_agents = parse_int(cfg.at("n_agents"));
      if (cfg.count("rounds")) o.rounds = parse_int(cfg.at("rounds"));
      if (cfg.count("exec_noise")) o.exec_noise = parse_real(cfg.at("exec_noise"));
      if (cfg.count("assess_noise")) o.assess_noise = parse_real(cfg.at("assess_noise"));
      if (cfg.count("beta")) o.beta = parse_real(cfg.at("beta"));
      if (cfg.count("seed")) seed = std::stoull(cfg.at("seed"));
      Rng rng(seed);
      const std::vector<double> scores = warmup_stationary(parse_norm(norm), o, rng);
      const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
      std::printf("norm %s agents %d rounds %d\nmean %.4f std %.4f\n", norm.c_str(), o.n_agents, o.rounds, mean,
                  sample_std(scores));
      return 0;
    }
    if (*rep) {
      std::cout << summary_markdown(report_dir(report_root));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
