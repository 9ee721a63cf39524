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

#include "distal/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <sstream>
#include <thread>
#include <tuple>

#include "distal/config.hpp"
#include "distal/errors.hpp"
#include "distal/io.hpp"
#include "distal/rng.hpp"

namespace distal {

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
  Rng rng = make_stream(master, name, index);
  return rng();
}

std::size_t fraction_count(double fraction, std::size_t total) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total))));
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += predicted[i] == truth[i];
  return truth.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(truth.size());
}

// Fixed evaluation sets for one run.
struct HeldOut {
  Matrix dev_x;
  std::vector<int> dev_y;
  Matrix test_x;
  std::vector<int> test_y;
};

struct TrainedGeneration {
  Model params;
  int best_epoch = 0;
  std::vector<int> dev_pred;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

TrainedGeneration train_generation(const RunConfig& cfg, const Dataset& data, const PoolState& pool,
                                   const HeldOut& held, const std::optional<Matrix>& teacher,
                                   const std::vector<std::uint8_t>& teacher_mask, std::uint64_t seed, int round) {
  const std::vector<SampleId> labeled = pool.labeled_ids();
  Batch<double> batch;
  batch.X = data.gather(labeled);
  batch.labels = pool.observed_labels(labeled);
  if (teacher) {
    batch.teacher = *teacher;
    batch.teacher_mask = teacher_mask;
  }

  Rng init_rng = make_stream(seed, "init", static_cast<std::uint64_t>(round));
  Rng batch_rng = make_stream(seed, "batch", static_cast<std::uint64_t>(round));
  const Model init = init_params<double>(cfg.arch, data.dims(), cfg.hidden, data.classes(), init_rng);
  auto dev_score = [&](const Model& m) { return accuracy(predict(m, held.dev_x), held.dev_y); };
  auto result = train<double>(init, batch, cfg.train, dev_score, batch_rng);

  TrainedGeneration out;
  out.params = std::move(result.best);
  out.best_epoch = result.best_epoch;
  out.dev_pred = predict(out.params, held.dev_x);
  out.val_accuracy = accuracy(out.dev_pred, held.dev_y);
  out.test_accuracy = held.test_y.empty() ? 0.0 : accuracy(predict(out.params, held.test_x), held.test_y);
  return out;
}

ModelSnapshot make_snapshot(int generation, const TrainedGeneration& g, const AccMatrix& acc) {
  ModelSnapshot s;
  s.generation = generation;
  s.params = g.params;
  s.dev_acc = acc.correct(generation);
  s.dev_preds = acc.predicted(generation);
  s.val_accuracy = g.val_accuracy;
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// The core loop shared by every mode. `noise_start` (when set) is the last
// clean round.
RunArtifacts execute(const RunConfig& cfg, std::uint64_t seed, std::optional<int> noise_start) {
  cfg.validate();
  LoadedData loaded = make_data(cfg.dataset, seed);
  const Dataset& data = loaded.dataset;
  PoolState pool = std::move(loaded.pool);

  HeldOut held;
  held.dev_x = data.gather(pool.dev);
  held.dev_y = data.true_labels(pool.dev);
  held.test_x = data.gather(pool.test);
  held.test_y = data.true_labels(pool.test);

  const std::size_t train_size = pool.train_size();
  const std::size_t k = fraction_count(cfg.per_round_fraction, train_size);
  const std::size_t k0 = std::min(fraction_count(cfg.initial_fraction, train_size), train_size);

  RunArtifacts art;
  art.config = cfg;
  RunReport& rep = art.report;
  rep.seed = seed;
  rep.dataset = data.name();
  rep.mode = to_string(cfg.mode);
  rep.strategy = to_string(cfg.strategy);
  rep.train_size = train_size;
  rep.budget = k;
  rep.config = config_echo_json(cfg, seed);
  rep.config_hash = hex64(fnv1a(rep.config.dump()));
  if (noise_start) rep.noise_start_round = *noise_start;

  // Seed generation on a random initial batch.
  {
    const Model unused = Model::zeros(cfg.arch, data.dims(), cfg.hidden, data.classes());
    AcquisitionRequest req{unused, data, pool, k0, derive_seed(seed, "acquire", 0)};
    const auto initial = random_select(req);
    pool = acquire(pool, initial, data);
  }
  art.initial_pool = pool;
  art.acc = AccMatrix(held.dev_y);
  {
    const auto g0 = train_generation(cfg, data, pool, held, std::nullopt, {}, seed, 0);
    art.acc.append(g0.dev_pred);
    art.store.push(make_snapshot(0, g0, art.acc));
    rep.seed_test_accuracy = g0.test_accuracy;
    rep.seed_val_accuracy = g0.val_accuracy;
  }

  PseudoLabelCache cache;
  const bool distill = cfg.mode != Mode::baseline;
  for (int t = 1; t <= cfg.rounds; ++t) {
    if (pool.unlabeled.empty()) {
      rep.truncated = true;
      break;
    }
    const auto started = std::chrono::steady_clock::now();
    RoundReport rr;
    rr.round = t;

    const Model& acquisition_model = art.store.back().params;
    const std::size_t budget = std::min(k, pool.unlabeled.size());
    AcquisitionRequest req{acquisition_model, data, pool, budget,
                           derive_seed(seed, "acquire", static_cast<std::uint64_t>(t))};
    rr.acquired = select(cfg.strategy, req);

    // Teacher selection happens before the oracle labels arrive, as in the
    // TrustAL loop; it only reads predecessor generations.
    std::optional<TeacherProvider> teacher;
    if (distill) {
      const int prev = t - 1;
      std::optional<ImportanceWeights> weights;
      if (prev >= 1) weights = importance_weights(correct_inconsistency(art.acc, prev));
      switch (cfg.mode) {
        case Mode::trustal_mc: {
          const ModelSnapshot& s = select_mc(art.store);
          teacher = TeacherProvider::single(s);
          rr.teacher_generation = s.generation;
          if (weights) rr.teacher_score = teacher_score(*weights, s.dev_acc);
          art.trace.push_back({t, s.generation, rr.teacher_score, true});
          break;
        }
        case Mode::trustal_nc: {
          const Eigen::VectorXd ci =
              prev >= 1 ? Eigen::VectorXd(correct_inconsistency(art.acc, prev).cast<double>().matrix())
                        : Eigen::VectorXd::Zero(art.acc.dev_size());
          const NcSelection sel = select_nc(art.store, ci);
          teacher = TeacherProvider::single(*sel.teacher);
          rr.teacher_generation = sel.teacher->generation;
          if (!sel.fallback) {
            rr.teacher_score = sel.score;
            for (const auto& [gen, score] : sel.scores) {
              art.trace.push_back({t, gen, score, gen == sel.teacher->generation});
            }
          } else {
            if (weights) rr.teacher_score = teacher_score(*weights, sel.teacher->dev_acc);
            art.trace.push_back({t, sel.teacher->generation, rr.teacher_score, true});
          }
          break;
        }
        case Mode::trustal_ensemble: {
          teacher = select_ensemble(art.store);
          for (const auto* s : teacher->members()) art.trace.push_back({t, s->generation, std::nullopt, true});
          break;
        }
        case Mode::baseline:
          break;
      }
    }

    pool = acquire(pool, rr.acquired, data);
    if (noise_start && t > *noise_start && cfg.noise.ratio > 0.0) {
      Corruption c = corrupt_labels(pool, rr.acquired, cfg.noise.ratio, data.classes(),
                                    derive_seed(seed, "corrupt", static_cast<std::uint64_t>(t)));
      pool = std::move(c.pool);
      rr.corrupted = std::move(c.flipped);
    }

    std::optional<Matrix> teacher_probs;
    std::vector<std::uint8_t> mask;
    if (teacher) {
      const std::vector<SampleId> labeled = pool.labeled_ids();
      const PseudoLabels pl = teacher->pseudo_labels(cache, labeled, data);
      teacher_probs = pl.probs;
      rr.pseudo_label_hits = pl.hits;
      rr.pseudo_label_misses = pl.misses;
      if (cfg.distill_scope == DistillScope::queries) {
        std::vector<SampleId> queries = rr.acquired;
        std::sort(queries.begin(), queries.end());
        mask.assign(labeled.size(), 0);
        for (std::size_t j = 0; j < labeled.size(); ++j) {
          mask[j] = std::binary_search(queries.begin(), queries.end(), labeled[j]) ? 1 : 0;
        }
      }
    }

    const auto g = train_generation(cfg, data, pool, held, teacher_probs, mask, seed, t);
    art.acc.append(g.dev_pred);
    art.store.push(make_snapshot(t, g, art.acc));

    rr.labeled_count = pool.labeled.size();
    rr.labeled_fraction = static_cast<double>(pool.labeled.size()) / static_cast<double>(train_size);
    rr.test_accuracy = g.test_accuracy;
    rr.val_accuracy = g.val_accuracy;
    rr.best_epoch = g.best_epoch;
    rr.mci = mci(art.acc, t);
    rr.forgetting_events = forgetting_events(art.acc, t - 1, t);
    rr.learning_events = learning_events(art.acc, t - 1, t);
    rr.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    rep.rounds.push_back(std::move(rr));
  }
  if (static_cast<int>(rep.rounds.size()) < cfg.rounds) rep.truncated = true;

  art.final_pool = pool;
  rep.mean_pairwise_correct_consistency = mean_pairwise_correct_consistency(art.acc);
  int boundary = static_cast<int>(rep.rounds.size());
  if (cfg.phase_boundary > 0) {
    boundary = std::min(cfg.phase_boundary, boundary);
  } else if (rep.rounds.size() >= 3) {
    boundary = detect_phases(rep);
  }
  summarize_phases(rep, boundary);
  return art;
}

}  // namespace

bool RoundReport::operator==(const RoundReport& o) const {
  auto key = [](const RoundReport& r) {
    return std::tie(r.round, r.labeled_count, r.labeled_fraction, r.test_accuracy, r.val_accuracy, r.best_epoch, r.mci,
                    r.forgetting_events, r.learning_events, r.teacher_generation, r.teacher_score,
                    r.pseudo_label_misses, r.pseudo_label_hits, r.acquired, r.corrupted);
  };
  return key(*this) == key(o);
}

Mode parse_mode(const std::string& name) {
  if (name == "baseline") return Mode::baseline;
  if (name == "trustal_mc") return Mode::trustal_mc;
  if (name == "trustal_nc") return Mode::trustal_nc;
  if (name == "trustal_ensemble") return Mode::trustal_ensemble;
  throw ArgumentError("unknown mode '" + name + "' (expected baseline | trustal_mc | trustal_nc | trustal_ensemble)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::baseline: return "baseline";
    case Mode::trustal_mc: return "trustal_mc";
    case Mode::trustal_nc: return "trustal_nc";
    case Mode::trustal_ensemble: return "trustal_ensemble";
  }
  return "?";
}

void RunConfig::validate() const {
  dataset.validate();
  auto fraction_ok = [](double f) { return f > 0.0 && f <= 1.0; };
  if (!fraction_ok(initial_fraction)) throw ArgumentError("initial_fraction must lie in (0, 1]");
  if (!fraction_ok(per_round_fraction)) throw ArgumentError("per_round_fraction must lie in (0, 1]");
  if (rounds < 1) throw ArgumentError("rounds must be >= 1");
  if (arch == Arch::mlp1 && hidden < 1) throw ArgumentError("model.hidden must be >= 1");
  train.validate();
  if (!(noise.ratio >= 0.0 && noise.ratio <= 1.0)) throw ArgumentError("noise.ratio must lie in [0, 1]");
  if (noise.start == NoiseConfig::Start::round && noise.start_round < 0) {
    throw ArgumentError("noise.start round must be >= 0");
  }
  if (phase_boundary < 0) throw ArgumentError("phase.boundary must be >= 0");
  if (seeds.empty()) throw ArgumentError("seeds must list at least one seed");
  if (workers < 0) throw ArgumentError("workers must be >= 0");
}

RunReport run_baseline(const RunConfig& config, std::uint64_t seed) {
  if (config.mode != Mode::baseline) throw ArgumentError("run_baseline needs mode = baseline");
  return execute(config, seed, std::nullopt).report;
}

RunReport run_trustal(const RunConfig& config, std::uint64_t seed) {
  if (config.mode == Mode::baseline) throw ArgumentError("run_trustal needs a trustal_* mode");
  return execute(config, seed, std::nullopt).report;
}

RunArtifacts run(const RunConfig& config, std::uint64_t seed) {
  if (!config.noise.enabled()) return execute(config, seed, std::nullopt);
  int start = config.noise.start_round;
  if (config.noise.start == NoiseConfig::Start::phase) {
    if (config.phase_boundary > 0) {
      start = config.phase_boundary;
    } else {
      RunConfig clean = config;
      clean.noise = NoiseConfig{};
      start = execute(clean, seed, std::nullopt).report.phase_boundary;
    }
  }
  return execute(config, seed, start);
}

RunReport run_noise_experiment(const RunConfig& config, std::uint64_t seed) {
  if (!config.noise.enabled()) throw ArgumentError("run_noise_experiment needs noise.start to be set");
  return run(config, seed).report;
}

int detect_phases(const std::vector<double>& val) {
  const int T = static_cast<int>(val.size());
  if (T < 3) throw AnalysisError("phase detection needs at least 3 rounds");
  // window(r) = v[r-1] + v[r] + v[r+1] for rounds r = 2..T-1 (1-based).
  auto window = [&](int r) { return val[static_cast<std::size_t>(r - 2)] + val[static_cast<std::size_t>(r - 1)] + val[static_cast<std::size_t>(r)]; };
  for (int r = 3; r <= T - 1; ++r) {
    if (window(r) <= window(r - 1)) return r - 1;
  }
  return T;
}

int detect_phases(const RunReport& report) {
  std::vector<double> val;
  for (const auto& r : report.rounds) val.push_back(r.val_accuracy);
  return detect_phases(val);
}

void summarize_phases(RunReport& report, int boundary) {
  const int T = static_cast<int>(report.rounds.size());
  boundary = std::clamp(boundary, 0, T);
  report.phase_boundary = boundary;
  auto summarize = [&](int first, int last) {
    PhaseSummary s;
    s.first_round = first;
    s.last_round = last;
    if (s.size() == 0) return s;
    for (int r = first; r <= last; ++r) {
      const auto& rr = report.rounds[static_cast<std::size_t>(r - 1)];
      s.mean_test_accuracy += rr.test_accuracy;
      s.mean_val_accuracy += rr.val_accuracy;
      s.mean_mci += rr.mci;
    }
    s.mean_test_accuracy /= s.size();
    s.mean_val_accuracy /= s.size();
    s.mean_mci /= s.size();
    return s;
  };
  report.stable = summarize(1, boundary);
  report.saturated = summarize(boundary + 1, T);
}

std::vector<RunArtifacts> run_parallel(const std::vector<RunJob>& jobs, int workers) {
  std::vector<std::optional<RunArtifacts>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run(jobs[i].config, jobs[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t n = workers > 0 ? static_cast<std::size_t>(workers)
                              : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  n = std::min(n, std::max<std::size_t>(1, jobs.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  std::vector<RunArtifacts> out;
  out.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

// --- serialization -----------------------------------------------------------

namespace {

template <typename T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

nlohmann::ordered_json phase_json(const PhaseSummary& s) {
  nlohmann::ordered_json j;
  j["first_round"] = s.first_round;
  j["last_round"] = s.last_round;
  j["rounds"] = s.size();
  if (s.size() == 0) {
    j["mean_test_accuracy"] = nullptr;
    j["mean_val_accuracy"] = nullptr;
    j["mean_mci"] = nullptr;
  } else {
    j["mean_test_accuracy"] = s.mean_test_accuracy;
    j["mean_val_accuracy"] = s.mean_val_accuracy;
    j["mean_mci"] = s.mean_mci;
  }
  return j;
}

PhaseSummary phase_from(const nlohmann::ordered_json& j) {
  PhaseSummary s;
  s.first_round = j.at("first_round").get<int>();
  s.last_round = j.at("last_round").get<int>();
  if (s.size() > 0) {
    s.mean_test_accuracy = j.at("mean_test_accuracy").get<double>();
    s.mean_val_accuracy = j.at("mean_val_accuracy").get<double>();
    s.mean_mci = j.at("mean_mci").get<double>();
  }
  return s;
}

}  // namespace

nlohmann::ordered_json round_metrics_json(const RoundReport& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["labeled_count"] = r.labeled_count;
  j["labeled_fraction"] = r.labeled_fraction;
  j["test_accuracy"] = r.test_accuracy;
  j["val_accuracy"] = r.val_accuracy;
  j["best_epoch"] = r.best_epoch;
  j["mci"] = r.mci;
  j["forgetting_events"] = r.forgetting_events;
  j["learning_events"] = r.learning_events;
  j["acquired_ids"] = r.acquired;
  j["corrupted_ids"] = r.corrupted;
  return j;
}

nlohmann::ordered_json to_json(const RoundReport& r, bool include_wall_time) {
  nlohmann::ordered_json j = round_metrics_json(r);
  nlohmann::ordered_json teacher;
  teacher["generation"] = optional_json(r.teacher_generation);
  teacher["score"] = optional_json(r.teacher_score);
  teacher["pseudo_label_hits"] = r.pseudo_label_hits;
  teacher["pseudo_label_misses"] = r.pseudo_label_misses;
  j["teacher"] = teacher;
  if (include_wall_time) j["wall_time_ms"] = r.wall_time_ms;
  return j;
}

RoundReport round_from_json(const nlohmann::ordered_json& j) {
  RoundReport r;
  r.round = j.at("round").get<int>();
  r.labeled_count = j.at("labeled_count").get<std::size_t>();
  r.labeled_fraction = j.at("labeled_fraction").get<double>();
  r.test_accuracy = j.at("test_accuracy").get<double>();
  r.val_accuracy = j.at("val_accuracy").get<double>();
  r.best_epoch = j.at("best_epoch").get<int>();
  r.mci = j.at("mci").get<double>();
  r.forgetting_events = j.at("forgetting_events").get<long>();
  r.learning_events = j.at("learning_events").get<long>();
  r.acquired = j.at("acquired_ids").get<std::vector<SampleId>>();
  r.corrupted = j.at("corrupted_ids").get<std::vector<SampleId>>();
  if (j.contains("teacher")) {
    const auto& t = j.at("teacher");
    r.teacher_generation = optional_from<int>(t, "generation");
    r.teacher_score = optional_from<double>(t, "score");
    r.pseudo_label_hits = t.at("pseudo_label_hits").get<std::size_t>();
    r.pseudo_label_misses = t.at("pseudo_label_misses").get<std::size_t>();
  }
  if (j.contains("wall_time_ms")) r.wall_time_ms = j.at("wall_time_ms").get<double>();
  return r;
}

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["dataset"] = r.dataset;
  j["mode"] = r.mode;
  j["strategy"] = r.strategy;
  j["train_size"] = r.train_size;
  j["budget"] = r.budget;
  j["seed_test_accuracy"] = r.seed_test_accuracy;
  j["seed_val_accuracy"] = r.seed_val_accuracy;
  j["truncated"] = r.truncated;
  j["mean_pairwise_correct_consistency"] = r.mean_pairwise_correct_consistency;
  j["phase_boundary"] = r.phase_boundary;
  j["noise_start_round"] = optional_json(r.noise_start_round);
  j["phases"] = {{"stable", phase_json(r.stable)}, {"saturated", phase_json(r.saturated)}};
  auto rounds = nlohmann::ordered_json::array();
  for (const auto& rr : r.rounds) rounds.push_back(to_json(rr, true));
  j["rounds"] = rounds;
  j["config"] = r.config;
  return j;
}

RunReport report_from_json(const nlohmann::ordered_json& j) {
  RunReport r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.dataset = j.at("dataset").get<std::string>();
  r.mode = j.at("mode").get<std::string>();
  r.strategy = j.at("strategy").get<std::string>();
  r.train_size = j.at("train_size").get<std::size_t>();
  r.budget = j.at("budget").get<std::size_t>();
  r.seed_test_accuracy = j.at("seed_test_accuracy").get<double>();
  r.seed_val_accuracy = j.at("seed_val_accuracy").get<double>();
  r.truncated = j.at("truncated").get<bool>();
  r.mean_pairwise_correct_consistency = j.at("mean_pairwise_correct_consistency").get<double>();
  r.phase_boundary = j.at("phase_boundary").get<int>();
  r.noise_start_round = optional_from<int>(j, "noise_start_round");
  r.stable = phase_from(j.at("phases").at("stable"));
  r.saturated = phase_from(j.at("phases").at("saturated"));
  for (const auto& rr : j.at("rounds")) r.rounds.push_back(round_from_json(rr));
  r.config = j.at("config");
  return r;
}

std::string rounds_jsonl(const RunReport& report) {
  std::string out;
  for (const auto& r : report.rounds) out += to_json(r).dump() + "\n";
  return out;
}

std::string teacher_trace_csv(const std::vector<TeacherTraceRow>& rows) {
  std::ostringstream out;
  out << "round,candidate_generation,score,chosen\n";
  for (const auto& r : rows) {
    out << r.round << ',' << r.candidate_generation << ',' << (r.score ? format_double(*r.score) : "") << ','
        << (r.chosen ? 1 : 0) << '\n';
  }
  return out.str();
}

void write_run_outputs(const std::string& dir, const RunArtifacts& art) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  atomic_write((root / "rounds.jsonl").string(), rounds_jsonl(art.report));

  nlohmann::ordered_json run = to_json(art.report);
  // Wall-clock values live only here so every other output is reproducible.
  nlohmann::ordered_json meta;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  meta["created_at"] = stamp;
  double total = 0.0;
  for (const auto& r : art.report.rounds) total += r.wall_time_ms;
  meta["wall_time_ms_total"] = total;
  run["metadata"] = meta;
  atomic_write((root / "run.json").string(), run.dump(1) + "\n");

  atomic_write((root / "accmatrix.csv").string(), accmatrix_csv(art.acc, art.initial_pool.dev));
  atomic_write((root / "teacher_trace.csv").string(), teacher_trace_csv(art.trace));
  atomic_write((root / "split.json").string(), split_manifest_json(art.initial_pool));
  atomic_write((root / "config.txt").string(), config_echo_text(art.config, art.report.seed));
  if (art.config.save_snapshots) art.store.save((root / "snapshots.jsonl").string());
}

RunReport load_run_report(const std::string& dir) {
  const auto path = (std::filesystem::path(dir) / "run.json").string();
  if (!std::filesystem::exists(path)) throw IoError("no run.json in " + dir);
  try {
    return report_from_json(nlohmann::ordered_json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace distal
