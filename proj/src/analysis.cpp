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

#include "distal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "distal/errors.hpp"
#include "distal/io.hpp"
#include "distal/rng.hpp"

namespace distal {

Eigen::Index ReferenceModel::column(SampleId id) const {
  const auto it = std::lower_bound(train_ids.begin(), train_ids.end(), id);
  if (it == train_ids.end() || *it != id) throw AnalysisError("sample " + std::to_string(id) + " is not in the train pool");
  return static_cast<Eigen::Index>(it - train_ids.begin());
}

ReferenceModel train_reference(const Dataset& data, const PoolState& pool, Arch arch, int hidden,
                               const TrainConfig& train_cfg, std::uint64_t seed) {
  ReferenceModel ref;
  ref.train_ids = pool.labeled_ids();
  const auto unlabeled = pool.unlabeled_ids();
  ref.train_ids.insert(ref.train_ids.end(), unlabeled.begin(), unlabeled.end());
  std::sort(ref.train_ids.begin(), ref.train_ids.end());
  if (ref.train_ids.empty()) throw AnalysisError("reference model needs a non-empty train pool");

  Batch<double> batch;
  batch.X = data.gather(ref.train_ids);
  batch.labels = data.true_labels(ref.train_ids);

  const Matrix dev_x = data.gather(pool.dev);
  const std::vector<int> dev_y = data.true_labels(pool.dev);
  auto dev_score = [&](const Model& m) {
    const auto pred = predict(m, dev_x);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == dev_y[i];
    return static_cast<double>(ok) / static_cast<double>(dev_y.size());
  };

  Rng init_rng = make_stream(seed, "reference_init");
  Rng batch_rng = make_stream(seed, "reference_batch");
  const Model init = init_params<double>(arch, data.dims(), hidden, data.classes(), init_rng);
  ref.params = train<double>(init, batch, train_cfg, dev_score, batch_rng).best;

  const auto out = forward_batch(ref.params, batch.X);
  ref.embeddings = out.penult;
  ref.probs = out.probs;
  if (!pool.test.empty()) {
    const auto pred = predict(ref.params, data.gather(pool.test));
    const auto truth = data.true_labels(pool.test);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == truth[i];
    ref.test_accuracy = static_cast<double>(ok) / static_cast<double>(truth.size());
  }
  return ref;
}

double entropy(const Eigen::Ref<const Eigen::VectorXd>& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

std::vector<double> uncertainty_quality(const ReferenceModel& ref,
                                        const std::vector<std::vector<SampleId>>& selections) {
  std::vector<double> out;
  out.reserve(selections.size());
  for (const auto& ids : selections) {
    if (ids.empty()) throw AnalysisError("uncertainty quality of an empty selection");
    double sum = 0.0;
    for (SampleId id : ids) sum += entropy(ref.probs.col(ref.column(id)));
    out.push_back(sum / static_cast<double>(ids.size()));
  }
  return out;
}

ClusterAssignment reference_clusters(const ReferenceModel& ref, std::size_t k, std::uint64_t seed) {
  return kmeans(ref.embeddings, k, seed);
}

std::vector<double> diversity_quality(const ReferenceModel& ref, const ClusterAssignment& clusters,
                                      const std::vector<std::vector<SampleId>>& selections) {
  std::vector<double> out;
  out.reserve(selections.size());
  for (const auto& ids : selections) {
    if (ids.empty()) throw AnalysisError("diversity quality of an empty selection");
    std::map<int, std::size_t> counts;
    for (SampleId id : ids) ++counts[clusters.labels[static_cast<std::size_t>(ref.column(id))]];
    Eigen::VectorXd p(static_cast<Eigen::Index>(counts.size()));
    Eigen::Index i = 0;
    for (const auto& [cluster, n] : counts) p(i++) = static_cast<double>(n) / static_cast<double>(ids.size());
    out.push_back(entropy(p));
  }
  return out;
}

std::vector<QualityRow> analyze_run(const RunConfig& config, const RunReport& report) {
  if (report.rounds.empty()) throw AnalysisError("run has no acquisition rounds");
  const LoadedData loaded = make_data(config.dataset, report.seed);
  const ReferenceModel ref =
      train_reference(loaded.dataset, loaded.pool, config.arch, config.hidden, config.train, report.seed);
  const ClusterAssignment clusters = reference_clusters(ref, std::max<std::size_t>(1, report.budget), report.seed);

  std::vector<std::vector<SampleId>> selections;
  for (const auto& r : report.rounds) selections.push_back(r.acquired);
  const auto unc = uncertainty_quality(ref, selections);
  const auto div = diversity_quality(ref, clusters, selections);

  std::vector<QualityRow> rows;
  for (std::size_t i = 0; i < selections.size(); ++i) {
    rows.push_back({report.rounds[i].round, selections[i].size(), unc[i], div[i]});
  }
  return rows;
}

std::string quality_csv(const std::vector<QualityRow>& rows) {
  std::ostringstream out;
  out << "round,n_selected,uncertainty_entropy,diversity_entropy\n";
  for (const auto& r : rows) {
    out << r.round << ',' << r.selected << ',' << format_double(r.uncertainty) << ',' << format_double(r.diversity)
        << '\n';
  }
  return out.str();
}

RunReport average_reports(const std::vector<RunReport>& reports, int boundary) {
  if (reports.empty()) throw AnalysisError("nothing to average");
  std::size_t rounds = reports.front().rounds.size();
  for (const auto& r : reports) {
    if (r.dataset != reports.front().dataset) throw ComparisonError("cannot average runs over different datasets");
    rounds = std::min(rounds, r.rounds.size());
  }
  RunReport avg = reports.front();
  avg.rounds.resize(rounds);
  const double n = static_cast<double>(reports.size());
  for (std::size_t i = 0; i < rounds; ++i) {
    RoundReport& out = avg.rounds[i];
    out.test_accuracy = out.val_accuracy = out.mci = out.labeled_fraction = 0.0;
    out.forgetting_events = out.learning_events = 0;
    out.acquired.clear();
    out.corrupted.clear();
    out.teacher_generation.reset();
    out.teacher_score.reset();
    for (const auto& r : reports) {
      out.test_accuracy += r.rounds[i].test_accuracy / n;
      out.val_accuracy += r.rounds[i].val_accuracy / n;
      out.mci += r.rounds[i].mci / n;
      out.labeled_fraction += r.rounds[i].labeled_fraction / n;
    }
  }
  avg.seed_test_accuracy = avg.seed_val_accuracy = avg.mean_pairwise_correct_consistency = 0.0;
  for (const auto& r : reports) {
    avg.seed_test_accuracy += r.seed_test_accuracy / n;
    avg.seed_val_accuracy += r.seed_val_accuracy / n;
    avg.mean_pairwise_correct_consistency += r.mean_pairwise_correct_consistency / n;
  }
  avg.truncated = std::any_of(reports.begin(), reports.end(), [](const RunReport& r) { return r.truncated; });
  int b = static_cast<int>(rounds);
  if (boundary > 0) {
    b = boundary;
  } else if (rounds >= 3) {
    b = detect_phases(avg);
  }
  summarize_phases(avg, b);
  return avg;
}

double plateau_accuracy(const RunReport& report) {
  if (report.rounds.empty()) throw AnalysisError("plateau of a run without rounds");
  const std::size_t n = std::min<std::size_t>(3, report.rounds.size());
  double sum = 0.0;
  for (std::size_t i = report.rounds.size() - n; i < report.rounds.size(); ++i) sum += report.rounds[i].test_accuracy;
  return sum / static_cast<double>(n);
}

std::optional<int> rounds_to_threshold(const RunReport& report, double plateau, double threshold) {
  const double target = threshold * plateau;
  for (const auto& r : report.rounds) {
    if (r.test_accuracy >= target) return r.round;
  }
  return std::nullopt;
}

Comparison compare_runs(const std::vector<RunReport>& reports, const std::vector<std::string>& labels,
                        std::size_t baseline, double threshold) {
  if (reports.size() < 2) throw ComparisonError("comparison needs at least two runs");
  if (baseline >= reports.size()) throw ComparisonError("baseline index out of range");
  if (!labels.empty() && labels.size() != reports.size()) throw ComparisonError("one label per run expected");
  for (const auto& r : reports) {
    if (r.dataset != reports.front().dataset) {
      throw ComparisonError("runs use different datasets ('" + reports.front().dataset + "' vs '" + r.dataset + "')");
    }
    if (r.rounds.empty()) throw ComparisonError("a run has no rounds");
  }

  Comparison cmp;
  cmp.dataset = reports.front().dataset;
  cmp.baseline = baseline;
  cmp.threshold = threshold;
  cmp.boundary = reports[baseline].phase_boundary;
  cmp.plateau = plateau_accuracy(reports[baseline]);

  std::vector<RunReport> phased = reports;
  for (auto& r : phased) summarize_phases(r, cmp.boundary);
  const RunReport& base = phased[baseline];

  auto delta = [](const PhaseSummary& a, const PhaseSummary& b, double PhaseSummary::*field) -> std::optional<double> {
    if (a.size() == 0 || b.size() == 0) return std::nullopt;
    return a.*field - b.*field;
  };
  for (std::size_t i = 0; i < phased.size(); ++i) {
    const RunReport& r = phased[i];
    ComparisonRow row;
    row.label = labels.empty() ? r.mode + "/" + r.strategy : labels[i];
    row.mode = r.mode;
    row.stable = r.stable;
    row.saturated = r.saturated;
    row.stable_acc_delta = delta(r.stable, base.stable, &PhaseSummary::mean_test_accuracy);
    row.stable_mci_delta = delta(r.stable, base.stable, &PhaseSummary::mean_mci);
    row.saturated_acc_delta = delta(r.saturated, base.saturated, &PhaseSummary::mean_test_accuracy);
    row.saturated_mci_delta = delta(r.saturated, base.saturated, &PhaseSummary::mean_mci);
    row.rounds_to_threshold = rounds_to_threshold(r, cmp.plateau, threshold);
    if (row.rounds_to_threshold) {
      row.labeled_fraction_at_threshold = r.rounds[static_cast<std::size_t>(*row.rounds_to_threshold - 1)].labeled_fraction;
    }
    cmp.rows.push_back(std::move(row));
  }
  return cmp;
}

std::string signed_delta(double v, int digits) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", digits, v);
  return buf;
}

std::string compare_csv(const Comparison& cmp) {
  auto opt = [](const std::optional<double>& v) { return v ? signed_delta(*v, 6) : std::string(); };
  auto fixed = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  auto mean = [&](const PhaseSummary& s, double PhaseSummary::*field) {
    return s.size() == 0 ? std::string() : fixed(s.*field);
  };
  std::ostringstream out;
  out << "label,mode,baseline,phase_boundary,stable_rounds,stable_acc,stable_acc_delta,stable_mci,stable_mci_delta,"
         "saturated_rounds,saturated_acc,saturated_acc_delta,saturated_mci,saturated_mci_delta,threshold,"
         "rounds_to_threshold,labeled_fraction_at_threshold\n";
  for (std::size_t i = 0; i < cmp.rows.size(); ++i) {
    const auto& r = cmp.rows[i];
    out << r.label << ',' << r.mode << ',' << (i == cmp.baseline ? 1 : 0) << ',' << cmp.boundary << ','
        << r.stable.size() << ',' << mean(r.stable, &PhaseSummary::mean_test_accuracy) << ','
        << opt(r.stable_acc_delta) << ',' << mean(r.stable, &PhaseSummary::mean_mci) << ','
        << opt(r.stable_mci_delta) << ',' << r.saturated.size() << ','
        << mean(r.saturated, &PhaseSummary::mean_test_accuracy) << ',' << opt(r.saturated_acc_delta) << ','
        << mean(r.saturated, &PhaseSummary::mean_mci) << ',' << opt(r.saturated_mci_delta) << ','
        << format_double(cmp.threshold, 6) << ','
        << (r.rounds_to_threshold ? std::to_string(*r.rounds_to_threshold) : std::string()) << ','
        << (r.labeled_fraction_at_threshold ? fixed(*r.labeled_fraction_at_threshold) : std::string())
        << '\n';
  }
  return out.str();
}

}  // namespace distal
