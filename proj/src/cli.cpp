// Copyright 2026 The Distal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "distal/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "distal/analysis.hpp"
#include "distal/config.hpp"
#include "distal/engine.hpp"
#include "distal/errors.hpp"
#include "distal/io.hpp"

namespace distal {

namespace {

namespace fs = std::filesystem;

// Bad invocation or missing inputs; maps to exit 2 like ConfigError.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int verbosity = 1;
  std::vector<std::string> dirs;
  std::optional<std::size_t> baseline;
  double threshold = 1.0;
  std::string output_file;
};

std::string default_out() {
  const char* env = std::getenv(kOutputRootEnv);
  return env && *env ? env : "runs";
}

ConfigFile load_with_overrides(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  ConfigFile file = load_config(o.config);
  for (const auto& ov : o.overrides) apply_override(file, ov);
  return file;
}

std::string seed_dir(const std::string& root, std::uint64_t seed) {
  return (fs::path(root) / ("seed_" + std::to_string(seed))).string();
}

void print_rounds(std::ostream& out, const RunReport& r) {
  char line[256];
  for (const auto& rr : r.rounds) {
    std::snprintf(line, sizeof line, "seed %llu round %d labeled %.4f test_acc %.4f val_acc %.4f mci %.4f teacher %s\n",
                  static_cast<unsigned long long>(r.seed), rr.round, rr.labeled_fraction, rr.test_accuracy,
                  rr.val_accuracy, rr.mci,
                  rr.teacher_generation ? std::to_string(*rr.teacher_generation).c_str() : "-");
    out << line;
  }
  if (r.truncated) out << "seed " << r.seed << " truncated: unlabeled pool exhausted\n";
}

int cmd_run(const Options& o, std::ostream& out) {
  const RunConfig cfg = resolve_config(load_with_overrides(o));
  std::vector<RunJob> jobs;
  for (auto seed : cfg.seeds) jobs.push_back({cfg, seed});
  const auto results = run_parallel(jobs, cfg.workers);
  for (const auto& art : results) {
    const std::string dir = seed_dir(o.out, art.report.seed);
    write_run_outputs(dir, art);
    if (o.verbosity > 0) print_rounds(out, art.report);
    out << "wrote " << dir << '\n';
  }
  return kExitOk;
}

// One grid point of a sweep: its resolved config and where it lands.
struct SweepPoint {
  std::string name;
  std::string label;
  RunConfig config;
  std::optional<std::size_t> baseline;  // index of the baseline counterpart
};

// Identity of a baseline run: distillation settings have no effect on it.
std::string baseline_key(const RunConfig& cfg) {
  auto echo = config_echo_json(cfg, 0);
  echo.erase("train.alpha");
  echo.erase("train.distill_scope");
  return echo.dump();
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const ConfigFile file = load_with_overrides(o);
  if (file.sweep.empty()) throw UsageError("config has no sweep.<key> grid");
  const auto grid = sweep_grid(file);

  std::vector<SweepPoint> points;
  std::map<std::string, std::size_t> baselines;
  auto baseline_for = [&](const RunConfig& cfg, const std::string& label) {
    RunConfig b = cfg;
    b.mode = Mode::baseline;
    const std::string key = baseline_key(b);
    if (auto it = baselines.find(key); it != baselines.end()) return it->second;
    points.push_back({"", label, b, std::nullopt});
    baselines[key] = points.size() - 1;
    return points.size() - 1;
  };

  for (const auto& assignment : grid) {
    ConfigFile f = file;
    std::string label;
    for (const auto& [k, v] : assignment) {
      f.set(k, v);
      label += (label.empty() ? "" : ";") + k + "=" + v;
    }
    const RunConfig cfg = resolve_config(f);
    if (cfg.mode == Mode::baseline) {
      baseline_for(cfg, label);
    } else {
      points.push_back({"", label, cfg, std::nullopt});
    }
  }
  // Baseline counterparts for every distilled point, added after the grid.
  const std::size_t grid_points = points.size();
  for (std::size_t i = 0; i < grid_points; ++i) {
    if (points[i].config.mode == Mode::baseline) continue;
    std::string label = points[i].label;
    const std::size_t b = baseline_for(points[i].config, "baseline[" + label + "]");
    points[i].baseline = b;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", i);
    points[i].name = name;
  }

  std::vector<RunJob> jobs;
  std::vector<std::size_t> job_point;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (auto seed : points[i].config.seeds) {
      jobs.push_back({points[i].config, seed});
      job_point.push_back(i);
    }
  }
  const int workers = resolve_config(file).workers;
  const auto results = run_parallel(jobs, workers);

  std::vector<std::vector<RunReport>> per_point(points.size());
  for (std::size_t j = 0; j < results.size(); ++j) {
    const auto& p = points[job_point[j]];
    write_run_outputs(seed_dir((fs::path(o.out) / p.name).string(), jobs[j].seed), results[j]);
    per_point[job_point[j]].push_back(results[j].report);
  }
  std::vector<RunReport> averaged;
  for (std::size_t i = 0; i < points.size(); ++i) {
    averaged.push_back(average_reports(per_point[i], points[i].config.phase_boundary));
  }

  nlohmann::ordered_json manifest = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    nlohmann::ordered_json m;
    m["dir"] = points[i].name;
    m["label"] = points[i].label;
    m["mode"] = to_string(points[i].config.mode);
    m["baseline_dir"] = points[i].baseline ? nlohmann::ordered_json(points[points[i].baseline.value()].name) : nullptr;
    m["config"] = config_echo_json(points[i].config, points[i].config.seeds.front());
    manifest.push_back(m);
  }
  atomic_write((fs::path(o.out) / "sweep.json").string(), manifest.dump(1) + "\n");

  // One comparison per baseline group, rows concatenated under one header.
  std::string csv;
  for (const auto& [key, b] : baselines) {
    std::vector<RunReport> reports{averaged[b]};
    std::vector<std::string> labels{points[b].name + " " + points[b].label};
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].baseline == b) {
        reports.push_back(averaged[i]);
        labels.push_back(points[i].name + " " + points[i].label);
      }
    }
    if (reports.size() < 2) continue;
    const std::string part = compare_csv(compare_runs(reports, labels, 0, o.threshold));
    csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
  }
  atomic_write((fs::path(o.out) / "compare.csv").string(), csv);
  out << "sweep: " << points.size() << " configurations x seeds = " << jobs.size() << " runs in " << o.out << '\n';
  return kExitOk;
}

RunConfig config_from_report(const RunReport& report) {
  ConfigFile file;
  for (const auto& [k, v] : report.config.items()) file.set(k, v.get<std::string>());
  return resolve_config(file);
}

// A run directory, or a directory of seed_* run directories (averaged).
RunReport load_for_compare(const std::string& dir) {
  if (fs::exists(fs::path(dir) / "run.json")) return load_run_report(dir);
  std::vector<RunReport> seeds;
  if (fs::is_directory(dir)) {
    std::vector<fs::path> subdirs;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "run.json")) subdirs.push_back(e.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& p : subdirs) seeds.push_back(load_run_report(p.string()));
  }
  if (seeds.empty()) throw UsageError("no run.json under " + dir);
  return average_reports(seeds, config_from_report(seeds.front()).phase_boundary);
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.dirs.size() < 2) throw UsageError("compare needs at least two run directories");
  std::vector<RunReport> reports;
  std::vector<std::string> labels;
  for (const auto& d : o.dirs) {
    reports.push_back(load_for_compare(d));
    labels.push_back(fs::path(d).lexically_normal().filename().string().empty()
                         ? fs::path(d).lexically_normal().parent_path().filename().string()
                         : fs::path(d).lexically_normal().filename().string());
  }
  std::size_t baseline = 0;
  if (o.baseline) {
    baseline = *o.baseline;
  } else {
    for (std::size_t i = 0; i < reports.size(); ++i) {
      if (reports[i].mode == "baseline") {
        baseline = i;
        break;
      }
    }
  }
  const Comparison cmp = compare_runs(reports, labels, baseline, o.threshold);
  const std::string path = o.output_file.empty() ? (fs::path(o.out) / "compare.csv").string() : o.output_file;
  const std::string csv = compare_csv(cmp);
  atomic_write(path, csv);
  if (o.verbosity > 0) out << csv;
  out << "wrote " << path << '\n';
  return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  if (o.dirs.empty()) throw UsageError("analyze needs a run directory");
  for (const auto& d : o.dirs) {
    if (!fs::exists(fs::path(d) / "run.json")) throw UsageError("no run.json in " + d);
    const RunReport report = load_run_report(d);
    const auto rows = analyze_run(config_from_report(report), report);
    const std::string path = (fs::path(d) / "quality.csv").string();
    atomic_write(path, quality_csv(rows));
    out << "wrote " << path << '\n';
  }
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  ConfigFile file;
  if (!o.config.empty()) file = load_config(o.config);
  for (const auto& ov : o.overrides) apply_override(file, ov);
  const RunConfig cfg = resolve_config(file);
  if (!cfg.dataset.synthetic()) throw UsageError("synth needs dataset.source = synthetic");
  const LoadedData data = make_data(cfg.dataset, cfg.seeds.front());
  const std::string path =
      o.output_file.empty() ? (fs::path(o.out) / (cfg.dataset.name + ".csv")).string() : o.output_file;
  write_csv(path, data.dataset);
  out << "wrote " << path << " (" << data.dataset.size() << " samples)\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active learning with predecessor distillation"};
  app.require_subcommand(1);
  Options o;
  o.out = default_out();
  bool quiet = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-o,--out", o.out, std::string("Output root (default $") + kOutputRootEnv + " or ./runs)");
    sub->add_option("-O,--override", o.overrides, "key=value, applied after the config file");
    sub->add_flag("-q,--quiet", quiet, "Suppress per-round lines");
  };

  auto* run_cmd = app.add_subcommand("run", "Run every seed of a config");
  run_cmd->add_option("-c,--config", o.config, "Config file or run.json")->required();
  common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep.<key> grid with baseline counterparts");
  sweep_cmd->add_option("-c,--config", o.config, "Config file")->required();
  sweep_cmd->add_option("--threshold", o.threshold, "Fraction of baseline plateau for rounds-to-threshold");
  common(sweep_cmd);

  auto* analyze_cmd = app.add_subcommand("analyze", "Acquisition quality of finished runs (quality.csv)");
  analyze_cmd->add_option("dirs", o.dirs, "Run directories")->required();

  auto* compare_cmd = app.add_subcommand("compare", "Phase table of two or more runs (compare.csv)");
  compare_cmd->add_option("dirs", o.dirs, "Run directories, or directories of seed_* runs");
  compare_cmd->add_option("--baseline", o.baseline, "Index of the baseline run (default: first baseline mode)");
  compare_cmd->add_option("--threshold", o.threshold, "Fraction of baseline plateau for rounds-to-threshold");
  compare_cmd->add_option("-f,--file", o.output_file, "Output CSV (default <out>/compare.csv)");
  compare_cmd->add_option("-o,--out", o.out, "Output root");
  compare_cmd->add_flag("-q,--quiet", quiet, "Do not echo the table");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic blob dataset as CSV");
  synth_cmd->add_option("-c,--config", o.config, "Config file (dataset.* keys)");
  synth_cmd->add_option("-f,--file", o.output_file, "Output CSV (default <out>/<dataset.name>.csv)");
  common(synth_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "distal: " << e.what() << '\n';
    return kExitUsage;
  }
  o.verbosity = quiet ? 0 : 1;

  try {
    if (run_cmd->parsed()) return cmd_run(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out);
    if (analyze_cmd->parsed()) return cmd_analyze(o, out);
    if (compare_cmd->parsed()) return cmd_compare(o, out);
    if (synth_cmd->parsed()) return cmd_synth(o, out);
  } catch (const ConfigError& e) {
    err << "distal: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "distal: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "distal: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace distal
