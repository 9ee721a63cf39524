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

#include <filesystem>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "distal/config.hpp"
#include "distal/engine.hpp"
#include "distal/errors.hpp"
#include "distal/io.hpp"

using namespace distal;

namespace {

RunConfig small(Mode mode = Mode::baseline, Strategy strategy = Strategy::random) {
  RunConfig cfg;
  cfg.dataset.name = "blobs";
  cfg.dataset.dims = 4;
  cfg.dataset.classes = 3;
  cfg.dataset.synth = {400, 4.0, 3};
  cfg.strategy = strategy;
  cfg.mode = mode;
  cfg.initial_fraction = 0.05;
  cfg.per_round_fraction = 0.05;
  cfg.rounds = 5;
  cfg.hidden = 8;
  cfg.train.epochs = 8;
  cfg.train.learning_rate = 0.01;
  cfg.train.batch_size = 16;
  return cfg;
}

std::vector<nlohmann::ordered_json> metrics(const RunReport& r) {
  std::vector<nlohmann::ordered_json> out;
  for (const auto& rr : r.rounds) out.push_back(round_metrics_json(rr));
  return out;
}

}  // namespace

TEST_CASE("mode names round trip") {
  for (Mode m : {Mode::baseline, Mode::trustal_mc, Mode::trustal_nc, Mode::trustal_ensemble}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_mode("nc"), ArgumentError);
}

TEST_CASE("one round of random acquisition adds initial + per-round fractions") {
  RunConfig cfg = small();
  cfg.rounds = 1;
  const RunReport r = run_baseline(cfg, 0);
  REQUIRE(r.rounds.size() == 1);
  CHECK(r.rounds[0].labeled_fraction == doctest::Approx(0.10));
  CHECK(r.rounds[0].acquired.size() == r.budget);
  CHECK(r.budget == 16);  // round(0.05 * 320)
  CHECK_FALSE(r.truncated);
}

TEST_CASE("runs are deterministic and labeled sets grow by k") {
  for (Strategy s : {Strategy::random, Strategy::conf, Strategy::coreset, Strategy::badge}) {
    const RunArtifacts a = run(small(Mode::trustal_mc, s), 1);
    const RunArtifacts b = run(small(Mode::trustal_mc, s), 1);
    CHECK(a.report == b.report);
    CHECK(a.acc.generations() == static_cast<int>(a.report.rounds.size()) + 1);
    std::size_t prev = a.initial_pool.labeled.size();
    for (const auto& rr : a.report.rounds) {
      CHECK(rr.labeled_count == prev + a.report.budget);
      CHECK(rr.mci >= 0.0);
      prev = rr.labeled_count;
    }
  }
}

TEST_CASE("teacher generations per mode") {
  const RunReport mc = run_trustal(small(Mode::trustal_mc), 2);
  for (const auto& rr : mc.rounds) CHECK(rr.teacher_generation == rr.round - 1);

  const RunReport nc = run_trustal(small(Mode::trustal_nc), 2);
  for (const auto& rr : nc.rounds) {
    REQUIRE(rr.teacher_generation.has_value());
    if (rr.round >= 2) CHECK(*rr.teacher_generation <= rr.round - 2);
  }

  const RunReport ens = run_trustal(small(Mode::trustal_ensemble), 2);
  for (const auto& rr : ens.rounds) CHECK_FALSE(rr.teacher_generation.has_value());

  const RunReport base = run_baseline(small(), 2);
  for (const auto& rr : base.rounds) CHECK_FALSE(rr.teacher_generation.has_value());
  CHECK_THROWS_AS(run_trustal(small(), 2), ArgumentError);
  CHECK_THROWS_AS(run_baseline(small(Mode::trustal_mc), 2), ArgumentError);
}

TEST_CASE("alpha = 0 reproduces the baseline exactly") {
  for (Mode m : {Mode::trustal_mc, Mode::trustal_nc, Mode::trustal_ensemble}) {
    RunConfig cfg = small(m, Strategy::badge);
    cfg.train.alpha = 0.0;
    CHECK(metrics(run_trustal(cfg, 3)) == metrics(run_baseline(small(Mode::baseline, Strategy::badge), 3)));
  }
}

TEST_CASE("pseudo-label cache hits grow once the teacher is reused") {
  RunConfig cfg = small(Mode::trustal_ensemble);
  const RunReport r = run_trustal(cfg, 4);
  CHECK(r.rounds[0].pseudo_label_hits == 0);
  // generation 0 already labeled the initial batch in round 1
  CHECK(r.rounds[1].pseudo_label_hits > 0);
}

TEST_CASE("pool exhaustion truncates the run") {
  RunConfig cfg = small();
  cfg.per_round_fraction = 0.4;
  cfg.rounds = 5;
  const RunReport r = run_baseline(cfg, 0);
  CHECK(r.truncated);
  CHECK(r.rounds.size() == 3);
  CHECK(r.rounds.back().labeled_fraction == doctest::Approx(1.0));
  CHECK(r.rounds.back().acquired.size() < r.budget);
}

TEST_CASE("noise: ratio 0 changes nothing, positive ratio flips floor(ratio k)") {
  RunConfig cfg = small(Mode::trustal_mc);
  const RunReport clean = run_trustal(cfg, 5);
  cfg.noise.start = NoiseConfig::Start::round;
  cfg.noise.start_round = 2;
  cfg.noise.ratio = 0.0;
  const RunReport zero = run_noise_experiment(cfg, 5);
  CHECK(metrics(zero) == metrics(clean));

  cfg.noise.ratio = 0.15;
  const RunArtifacts noisy = run(cfg, 5);
  const LoadedData data = make_data(cfg.dataset, 5);
  for (const auto& rr : noisy.report.rounds) {
    const std::size_t expected = rr.round > 2 ? static_cast<std::size_t>(0.15 * 16.0) : 0;
    CHECK(rr.corrupted.size() == expected);
    for (SampleId id : rr.corrupted) {
      CHECK(noisy.final_pool.observed_label.at(id) != data.dataset.at(id).true_label);
    }
  }
  CHECK(noisy.report.noise_start_round == 2);
  CHECK_THROWS_AS(run_noise_experiment(small(), 5), ArgumentError);

  cfg.noise.start = NoiseConfig::Start::phase;
  cfg.phase_boundary = 3;
  CHECK(run(cfg, 5).report.noise_start_round == 3);
  cfg.phase_boundary = 0;
  const RunArtifacts detected = run(cfg, 5);
  CHECK(detected.report.noise_start_round == clean.phase_boundary);
}

TEST_CASE("detect_phases: moving-average rule") {
  CHECK(detect_phases(std::vector<double>{0.5, 0.6, 0.7, 0.7, 0.69, 0.68}) == 4);
  CHECK(detect_phases(std::vector<double>{0.5, 0.5, 0.5, 0.5}) == 2);
  CHECK(detect_phases(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}) == 5);
  CHECK_THROWS_AS(detect_phases(std::vector<double>{0.1, 0.2}), AnalysisError);
}

TEST_CASE("phase summaries average their rounds") {
  RunReport r;
  for (int t = 1; t <= 4; ++t) {
    RoundReport rr;
    rr.round = t;
    rr.test_accuracy = 0.1 * t;
    rr.mci = t;
    r.rounds.push_back(rr);
  }
  summarize_phases(r, 3);
  CHECK(r.stable.size() == 3);
  CHECK(r.stable.mean_test_accuracy == doctest::Approx(0.2));
  CHECK(r.saturated.mean_mci == doctest::Approx(4.0));
  summarize_phases(r, 4);
  CHECK(r.saturated.size() == 0);
}

TEST_CASE("report serialization round-trips") {
  RunConfig cfg = small(Mode::trustal_nc);
  cfg.noise.start = NoiseConfig::Start::round;
  cfg.noise.start_round = 1;
  cfg.noise.ratio = 0.2;
  const RunReport r = run(cfg, 6).report;
  const RunReport back = report_from_json(nlohmann::ordered_json::parse(to_json(r).dump()));
  CHECK(back == r);
  for (const auto& rr : r.rounds) CHECK(round_from_json(nlohmann::ordered_json::parse(to_json(rr, true).dump())) == rr);
}

TEST_CASE("outputs are written and reproducible") {
  RunConfig cfg = small(Mode::trustal_mc);
  cfg.save_snapshots = true;
  const auto dir_a = oracle::temp_dir("engine_a");
  const auto dir_b = oracle::temp_dir("engine_b");
  write_run_outputs(dir_a, run(cfg, 7));
  write_run_outputs(dir_b, run(cfg, 7));
  for (const char* f : {"rounds.jsonl", "accmatrix.csv", "teacher_trace.csv", "split.json", "snapshots.jsonl"}) {
    CHECK(read_file(dir_a + "/" + f) == read_file(dir_b + "/" + f));
  }
  const RunReport loaded = load_run_report(dir_a);
  CHECK(loaded.rounds.size() == 5);
  CHECK(read_file(dir_a + "/teacher_trace.csv").rfind("round,candidate_generation,score,chosen\n", 0) == 0);
  CHECK_THROWS_AS(load_run_report(oracle::temp_dir("engine_empty")), IoError);
}

TEST_CASE("parallel driver matches sequential runs in job order") {
  std::vector<RunJob> jobs;
  for (std::uint64_t s = 0; s < 3; ++s) jobs.push_back({small(Mode::trustal_mc), s});
  const auto par = run_parallel(jobs, 3);
  REQUIRE(par.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(par[i].report == run(jobs[i].config, jobs[i].seed).report);

  RunConfig bad = small();
  bad.dataset.source = "/nonexistent.csv";
  jobs.push_back({bad, 0});
  CHECK_THROWS_AS(run_parallel(jobs, 2), IoError);
}
