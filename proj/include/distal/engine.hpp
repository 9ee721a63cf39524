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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "distal/acquisition.hpp"
#include "distal/classifier.hpp"
#include "distal/consistency.hpp"
#include "distal/data_pool.hpp"
#include "distal/teacher.hpp"

namespace distal {

enum class Mode { baseline, trustal_mc, trustal_nc, trustal_ensemble };

Mode parse_mode(const std::string& name);
std::string to_string(Mode m);

// Which labeled samples receive a distillation target.
enum class DistillScope {
  labeled,  // every sample in the labeled pool
  queries,  // only the batch acquired this round
};

struct NoiseConfig {
  enum class Start { none, phase, round };

  double ratio = 0.0;
  Start start = Start::none;
  // Last clean round. Newly acquired batches in rounds > start_round are
  // corrupted. Filled from phase detection when start == phase.
  int start_round = 0;

  bool enabled() const { return start != Start::none; }
};

struct RunConfig {
  DatasetSpec dataset;
  Strategy strategy = Strategy::random;
  Mode mode = Mode::baseline;
  double initial_fraction = 0.02;
  double per_round_fraction = 0.02;
  int rounds = 10;
  Arch arch = Arch::mlp1;
  int hidden = 32;
  TrainConfig train;
  DistillScope distill_scope = DistillScope::labeled;
  NoiseConfig noise;
  int phase_boundary = 0;  // 0 = detect from validation accuracy
  std::vector<std::uint64_t> seeds{0};
  int workers = 0;  // 0 = hardware concurrency
  bool save_snapshots = false;

  void validate() const;
};

struct RoundReport {
  int round = 0;
  std::size_t labeled_count = 0;
  double labeled_fraction = 0.0;
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  int best_epoch = 0;
  double mci = 0.0;
  long forgetting_events = 0;  // vs the previous generation
  long learning_events = 0;
  std::optional<int> teacher_generation;  // absent for baseline and ensemble
  std::optional<double> teacher_score;
  std::size_t pseudo_label_misses = 0;
  std::size_t pseudo_label_hits = 0;
  std::vector<SampleId> acquired;
  std::vector<SampleId> corrupted;
  double wall_time_ms = 0.0;  // kept out of rounds.jsonl

  // Ignores wall_time_ms.
  bool operator==(const RoundReport& o) const;
};

struct PhaseSummary {
  int first_round = 0;
  int last_round = -1;  // empty when last_round < first_round
  double mean_test_accuracy = 0.0;
  double mean_val_accuracy = 0.0;
  double mean_mci = 0.0;

  int size() const { return last_round >= first_round ? last_round - first_round + 1 : 0; }
  bool operator==(const PhaseSummary&) const = default;
};

struct RunReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string mode;
  std::string strategy;
  std::size_t train_size = 0;
  std::size_t budget = 0;  // k
  double seed_test_accuracy = 0.0;
  double seed_val_accuracy = 0.0;
  std::vector<RoundReport> rounds;
  bool truncated = false;
  double mean_pairwise_correct_consistency = 0.0;
  int phase_boundary = 0;
  PhaseSummary stable;
  PhaseSummary saturated;
  std::optional<int> noise_start_round;
  nlohmann::ordered_json config;  // resolved dotted-key echo

  bool operator==(const RunReport&) const = default;
};

struct TeacherTraceRow {
  int round = 0;
  int candidate_generation = 0;
  std::optional<double> score;
  bool chosen = false;
};

/// Everything a finished run produced.
struct RunArtifacts {
  RunConfig config;
  RunReport report;
  AccMatrix acc;
  std::vector<TeacherTraceRow> trace;
  SnapshotStore store;
  PoolState initial_pool;
  PoolState final_pool;
};

/// Seed model on a random initial batch, then T rounds of acquisition and
/// from-scratch CE training.
RunReport run_baseline(const RunConfig& config, std::uint64_t seed);

/// As run_baseline, but each round selects a teacher (per mode), fetches its
/// pseudo labels through a cache and trains on CE + alpha * KL.
RunReport run_trustal(const RunConfig& config, std::uint64_t seed);

/// Runs the configured mode with label corruption on every batch acquired
/// after the noise start point. With start == phase the boundary is taken
/// from `phase_boundary` when set, else detected on a clean run of the same
/// config and seed.
RunReport run_noise_experiment(const RunConfig& config, std::uint64_t seed);

/// Dispatches on mode and noise settings and keeps every artifact.
RunArtifacts run(const RunConfig& config, std::uint64_t seed);

/// Round index (1-based) where the centered three-round moving average of
/// `val_accuracy` peaks: the last window before the first window that does
/// not increase. Returns the final round when the average keeps rising.
int detect_phases(const std::vector<double>& val_accuracy);
int detect_phases(const RunReport& report);

/// Stable = rounds 1..boundary, saturated = boundary+1..T.
void summarize_phases(RunReport& report, int boundary);

struct RunJob {
  RunConfig config;
  std::uint64_t seed = 0;
};

/// Executes independent jobs on a bounded worker pool; results are in job
/// order and independent of the worker count.
std::vector<RunArtifacts> run_parallel(const std::vector<RunJob>& jobs, int workers);

nlohmann::ordered_json to_json(const RoundReport& r, bool include_wall_time = false);
RoundReport round_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::ordered_json& j);

/// Round metrics without teacher bookkeeping, for cross-mode equality checks.
nlohmann::ordered_json round_metrics_json(const RoundReport& r);

std::string rounds_jsonl(const RunReport& report);
std::string teacher_trace_csv(const std::vector<TeacherTraceRow>& rows);

/// Writes rounds.jsonl, run.json, accmatrix.csv, teacher_trace.csv and
/// split.json (plus snapshots.jsonl when enabled) into `dir`, atomically.
void write_run_outputs(const std::string& dir, const RunArtifacts& artifacts);

/// Reads run.json (with rounds) from a run directory.
RunReport load_run_report(const std::string& dir);

}  // namespace distal
