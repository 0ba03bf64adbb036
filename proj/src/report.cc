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

#include "rg/report.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "rg/policy_net.h"
#include "rg/strings.h"

namespace rg {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string join_reals(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ";" : "") + format_real(v[k]);
  return out;
}

std::vector<double> split_reals(const std::string& s) {
  std::vector<double> out;
  for (const std::string& t : split(s, ';')) {
    if (!trim(t).empty()) out.push_back(parse_real(t));
  }
  return out;
}

// Minimal line-plot canvas.
class Plot {
 public:
  Plot(std::string title, std::string xlabel, std::string ylabel, double x0, double x1, double y0, double y1)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)),
        x0_(x0), x1_(x1 > x0 ? x1 : x0 + 1.0), y0_(y0), y1_(y1 > y0 ? y1 : y0 + 1.0) {}

  void line(const std::vector<std::pair<double, double>>& pts, const std::string& colour, bool dashed = false) {
    if (pts.empty()) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
          << (dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (const auto& [x, y] : pts) body_ << fixed(px(x), 1) << "," << fixed(py(y), 1) << " ";
    body_ << "\"/>\n";
  }

  std::string svg() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title_ << "</text>\n"
       << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\"" << kH - kT - kB
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double x = x0_ + (x1_ - x0_) * k / 4.0;
      const double y = y0_ + (y1_ - y0_) * k / 4.0;
      os << "<text x=\"" << fixed(px(x), 1) << "\" y=\"" << kH - kB + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
         << fixed(x, x1_ - x0_ < 5 ? 2 : 0) << "</text>\n"
         << "<text x=\"" << kL - 5 << "\" y=\"" << fixed(py(y) + 3, 1) << "\" text-anchor=\"end\" font-size=\"10\">"
         << fixed(y, 2) << "</text>\n";
    }
    os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 5 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << xlabel_ << "</text>\n"
       << "<text x=\"14\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
       << (kT + kH - kB) / 2 << ")\">" << ylabel_ << "</text>\n"
       << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  static constexpr int kW = 640, kH = 400, kL = 60, kR = 20, kT = 30, kB = 45;
  double px(double x) const { return kL + (x - x0_) / (x1_ - x0_) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0_) / (y1_ - y0_) * (kH - kT - kB); }

  std::string title_, xlabel_, ylabel_;
  double x0_, x1_, y0_, y1_;
  std::ostringstream body_;
};

const char* colour(std::size_t k) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[k % 10];
}

bool is_run_dir(const fs::path& p) {
  return fs::exists(p / "spec.cfg") && fs::exists(p / "seeds.csv") && fs::exists(p / "metrics.csv");
}

}  // namespace

SettingSummary summarize(const ExperimentResult& result) {
  SettingSummary s;
  s.setting = result.spec.setting;
  s.seeds = static_cast<int>(result.seeds.size());
  s.mean_payoff = result.mean_payoff();
  s.std_payoff = result.std_payoff();
  s.reference = result.spec.reference_payoff();
  s.percent_of_reference = s.reference != 0.0 ? 100.0 * s.mean_payoff / s.reference : 0.0;
  s.discriminative = result.discriminative_count();
  std::vector<double> a, g;
  for (const SeedResult& r : result.seeds) {
    a.push_back(r.std_action);
    g.push_back(r.std_signal);
  }
  s.mean_std_action = mean_of(a);
  s.mean_std_signal = mean_of(g);
  return s;
}

std::string summary_markdown(const std::vector<SettingSummary>& rows) {
  std::ostringstream os;
  os << "| setting | seeds | payoff (mean ± std) | reference | % ref | disc | std[pi] | std[phi] |\n"
     << "|---|---|---|---|---|---|---|---|\n";
  for (const SettingSummary& s : rows) {
    os << "| " << s.setting << " | " << s.seeds << " | " << fixed(s.mean_payoff, 3) << " ± " << fixed(s.std_payoff, 3)
       << " | " << fixed(s.reference, 3) << " | " << fixed(s.percent_of_reference, 1) << " | " << s.discriminative << "/"
       << s.seeds << " | " << fixed(s.mean_std_action, 3) << " | " << fixed(s.mean_std_signal, 3) << " |\n";
  }
  return os.str();
}

void write_summary_csv(std::ostream& os, const std::vector<SettingSummary>& rows) {
  os << "setting,seeds,mean_payoff,std_payoff,reference,percent_of_reference,discriminative,mean_std_action,mean_std_signal\n";
  for (const SettingSummary& s : rows) {
    os << s.setting << "," << s.seeds << "," << format_real(s.mean_payoff) << "," << format_real(s.std_payoff) << ","
       << format_real(s.reference) << "," << format_real(s.percent_of_reference) << "," << s.discriminative << ","
       << format_real(s.mean_std_action) << "," << format_real(s.mean_std_signal) << "\n";
  }
}

std::string learning_curve_svg(const ExperimentResult& result) {
  double lo = result.spec.reference_payoff(), hi = lo;
  int last = 1;
  for (const SeedResult& r : result.seeds) {
    for (const MetricRow& m : r.rows) {
      lo = std::min(lo, m.payoff_real);
      hi = std::max(hi, m.payoff_real);
      last = std::max(last, m.outer_iter);
    }
  }
  const double pad = 0.05 * (hi - lo + 1e-9);
  Plot plot(result.spec.setting + ": real payoff", "outer iteration", "per-interaction payoff", 0.0, last, lo - pad,
            hi + pad);
  for (std::size_t k = 0; k < result.seeds.size(); ++k) {
    std::vector<std::pair<double, double>> pts;
    for (const MetricRow& m : result.seeds[k].rows) pts.emplace_back(m.outer_iter, m.payoff_real);
    plot.line(pts, colour(k));
  }
  const double ref = result.spec.reference_payoff();
  plot.line({{0.0, ref}, {static_cast<double>(last), ref}}, "black", true);
  return plot.svg();
}

std::string profile_svg(const ExperimentResult& result, bool signal) {
  Plot plot(result.spec.setting + (signal ? ": signal profile" : ": action profile"),
            signal ? "donor action" : "recipient reputation", signal ? "signal" : "action", 0.0, 1.0, 0.0, 1.0);
  for (std::size_t k = 0; k < result.seeds.size(); ++k) {
    const std::vector<double>& p = signal ? result.seeds[k].profile_signal : result.seeds[k].profile_action;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < p.size(); ++i) pts.emplace_back(static_cast<double>(i) / (p.size() - 1), p[i]);
    plot.line(pts, colour(k));
  }
  return plot.svg();
}

void write_run(const std::string& dir, const ExperimentResult& result) {
  const fs::path root(dir);
  fs::create_directories(root / "checkpoints");
  write_text(root / "spec.cfg", to_text(result.spec));
  std::vector<MetricRow> rows;
  for (const SeedResult& r : result.seeds) rows.insert(rows.end(), r.rows.begin(), r.rows.end());
  {
    std::ofstream os(root / "metrics.csv");
    write_metrics_csv(os, rows);
  }
  std::ostringstream seeds;
  seeds << "seed,final_payoff,std_action,std_signal,reported_iter,grad_ratio,profile_action,profile_signal\n";
  for (const SeedResult& r : result.seeds) {
    seeds << r.seed << "," << format_real(r.final_payoff) << "," << format_real(r.std_action) << ","
          << format_real(r.std_signal) << "," << r.reported_iter << "," << format_real(r.grad_ratio) << ","
          << join_reals(r.profile_action) << "," << join_reals(r.profile_signal) << "\n";
    if (!r.checkpoint.empty()) write_text(root / "checkpoints" / ("seed_" + std::to_string(r.seed) + ".ckpt"), r.checkpoint);
  }
  write_text(root / "seeds.csv", seeds.str());
  write_text(root / "summary.md", summary_markdown({summarize(result)}));
  write_text(root / "learning_curve.svg", learning_curve_svg(result));
  if (result.spec.learner.train_action) write_text(root / "profile_action.svg", profile_svg(result, false));
  if (result.spec.learner.train_signal) write_text(root / "profile_signal.svg", profile_svg(result, true));
}

ExperimentResult read_run(const std::string& dir) {
  const fs::path root(dir);
  ExperimentResult out;
  out.spec = parse_spec(read_file((root / "spec.cfg").string()));
  std::ifstream ms(root / "metrics.csv");
  const std::vector<MetricRow> rows = read_metrics_csv(ms);
  std::istringstream ss(read_file((root / "seeds.csv").string()));
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 8) throw std::invalid_argument("seeds.csv: expected 8 fields in '" + line + "'");
    SeedResult r;
    r.seed = std::stoull(f[0]);
    r.final_payoff = parse_real(f[1]);
    r.std_action = parse_real(f[2]);
    r.std_signal = parse_real(f[3]);
    r.reported_iter = parse_int(f[4]);
    r.grad_ratio = parse_real(f[5]);
    r.profile_action = split_reals(f[6]);
    r.profile_signal = split_reals(f[7]);
    for (const MetricRow& m : rows) {
      if (m.seed == r.seed) r.rows.push_back(m);
    }
    const fs::path ckpt = root / "checkpoints" / ("seed_" + f[0] + ".ckpt");
    if (fs::exists(ckpt)) r.checkpoint = read_file(ckpt.string());
    out.seeds.push_back(std::move(r));
  }
  return out;
}

std::vector<SettingSummary> report_dir(const std::string& root_dir) {
  const fs::path root(root_dir);
  std::vector<fs::path> runs;
  if (is_run_dir(root)) {
    runs.push_back(root);
  } else {
    for (const auto& e : fs::directory_iterator(root)) {
      if (e.is_directory() && is_run_dir(e.path())) runs.push_back(e.path());
    }
    std::sort(runs.begin(), runs.end());
  }
  std::vector<SettingSummary> out;
  for (const fs::path& p : runs) out.push_back(summarize(read_run(p.string())));
  write_text(root / "summary.md", summary_markdown(out));
  std::ofstream os(root / "summary.csv");
  write_summary_csv(os, out);
  return out;
}

}  // namespace rg
