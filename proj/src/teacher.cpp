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

#include "distal/teacher.hpp"

#include <fstream>
#include <sstream>

#include "distal/errors.hpp"
#include "distal/io.hpp"

namespace distal {

namespace {

nlohmann::json array_to_json(const Eigen::ArrayXi& a) {
  return std::vector<int>(a.data(), a.data() + a.size());
}

Eigen::ArrayXi array_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<int>>();
  return Eigen::Map<const Eigen::ArrayXi>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void SnapshotStore::push(ModelSnapshot snapshot) {
  if (!snapshots_.empty() && snapshot.generation <= snapshots_.back().generation) {
    throw ArgumentError("snapshot generations must strictly increase");
  }
  if (snapshot.dev_acc.size() != snapshot.dev_preds.size()) {
    throw ShapeError("snapshot dev_acc and dev_preds lengths differ");
  }
  snapshots_.push_back(std::move(snapshot));
}

const ModelSnapshot& SnapshotStore::back() const {
  if (snapshots_.empty()) throw SelectionError("snapshot store is empty");
  return snapshots_.back();
}

const ModelSnapshot& SnapshotStore::at_generation(int generation) const {
  for (const auto& s : snapshots_)
    if (s.generation == generation) return s;
  throw LookupError("no snapshot for generation " + std::to_string(generation));
}

void SnapshotStore::save(const std::string& path) const {
  std::ostringstream out;
  for (const auto& s : snapshots_) {
    nlohmann::ordered_json j;
    j["generation"] = s.generation;
    j["val_accuracy"] = s.val_accuracy;
    j["dev_acc"] = array_to_json(s.dev_acc);
    j["dev_preds"] = array_to_json(s.dev_preds);
    j["params"] = params_to_json(s.params);
    out << j.dump() << '\n';
  }
  atomic_write(path, out.str());
}

SnapshotStore SnapshotStore::load(const std::string& path) {
  std::istringstream in(read_file(path));
  SnapshotStore store;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    ModelSnapshot s;
    s.generation = j.at("generation").get<int>();
    s.val_accuracy = j.at("val_accuracy").get<double>();
    s.dev_acc = array_from_json(j.at("dev_acc"));
    s.dev_preds = array_from_json(j.at("dev_preds"));
    s.params = params_from_json<double>(j.at("params"));
    store.push(std::move(s));
  }
  return store;
}

const ModelSnapshot& select_mc(const SnapshotStore& store) { return store.back(); }

ImportanceWeights importance_weights(const Eigen::Ref<const Eigen::VectorXd>& ci) {
  if (ci.size() == 0) throw ArgumentError("importance weights need a non-empty inconsistency vector");
  return {softmax(ci)};
}

double teacher_score(const ImportanceWeights& weights, const Eigen::ArrayXi& candidate_acc) {
  if (weights.values.size() != candidate_acc.size()) throw ShapeError("teacher_score: length mismatch");
  return weights.values.dot(candidate_acc.cast<double>().matrix()) / static_cast<double>(candidate_acc.size());
}

NcSelection select_nc(const SnapshotStore& store, const Eigen::Ref<const Eigen::VectorXd>& current_ci) {
  if (store.empty()) throw SelectionError("snapshot store is empty");
  NcSelection out;
  if (store.size() < 2) {
    out.teacher = &select_mc(store);
    out.fallback = true;
    return out;
  }
  const ImportanceWeights w = importance_weights(current_ci);
  const auto& snaps = store.snapshots();
  for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
    const double g = teacher_score(w, snaps[i].dev_acc);
    out.scores.emplace_back(snaps[i].generation, g);
    if (out.teacher == nullptr || g >= out.score) {
      out.teacher = &snaps[i];
      out.score = g;
    }
  }
  return out;
}

const Eigen::VectorXd* PseudoLabelCache::find(int generation, SampleId id) const {
  auto it = entries_.find({generation, id});
  return it == entries_.end() ? nullptr : &it->second;
}

void PseudoLabelCache::insert(int generation, SampleId id, Eigen::VectorXd probs) {
  entries_.insert_or_assign({generation, id}, std::move(probs));
}

double PseudoLabelCache::hit_ratio() const {
  const std::size_t total = hits_ + misses_;
  return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
}

PseudoLabels pseudo_labels(PseudoLabelCache& cache, const ModelSnapshot& snapshot, std::span<const SampleId> ids,
                           const Dataset& data) {
  PseudoLabels out;
  out.probs.resize(snapshot.params.classes, static_cast<Eigen::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    if (const Eigen::VectorXd* hit = cache.find(snapshot.generation, ids[j])) {
      out.probs.col(col) = *hit;
      ++out.hits;
      cache.count(true);
      continue;
    }
    Eigen::VectorXd probs = forward(snapshot.params, data.at(ids[j]).features).probs;
    out.probs.col(col) = probs;
    cache.insert(snapshot.generation, ids[j], std::move(probs));
    ++out.misses;
    cache.count(false);
  }
  return out;
}

TeacherProvider TeacherProvider::single(const ModelSnapshot& snapshot) {
  TeacherProvider p;
  p.members_.push_back(&snapshot);
  return p;
}

Eigen::VectorXd TeacherProvider::probs(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd sum = forward(members_.front()->params, x).probs;
  for (std::size_t i = 1; i < members_.size(); ++i) sum += forward(members_[i]->params, x).probs;
  return sum / static_cast<double>(members_.size());
}

PseudoLabels TeacherProvider::pseudo_labels(PseudoLabelCache& cache, std::span<const SampleId> ids,
                                            const Dataset& data) const {
  PseudoLabels total = distal::pseudo_labels(cache, *members_.front(), ids, data);
  for (std::size_t i = 1; i < members_.size(); ++i) {
    const PseudoLabels part = distal::pseudo_labels(cache, *members_[i], ids, data);
    total.probs += part.probs;
    total.hits += part.hits;
    total.misses += part.misses;
  }
  total.probs /= static_cast<double>(members_.size());
  return total;
}

TeacherProvider select_ensemble(const SnapshotStore& store) {
  if (store.empty()) throw SelectionError("snapshot store is empty");
  TeacherProvider p;
  for (const auto& s : store.snapshots()) p.members_.push_back(&s);
  return p;
}

}  // namespace distal
