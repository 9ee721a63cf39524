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

#include "distal/acquisition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "distal/errors.hpp"
#include "distal/kmeans.hpp"
#include "distal/rng.hpp"

namespace distal {

namespace {

void check_budget(const AcquisitionRequest& req) {
  if (req.k < 1) throw BudgetError("acquisition budget k must be >= 1");
  if (req.k > req.pool.unlabeled.size()) {
    throw BudgetError("acquisition budget k=" + std::to_string(req.k) + " exceeds the " +
                      std::to_string(req.pool.unlabeled.size()) + " unlabeled samples");
  }
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "random") return Strategy::random;
  if (name == "conf") return Strategy::conf;
  if (name == "coreset") return Strategy::coreset;
  if (name == "badge") return Strategy::badge;
  throw ArgumentError("unknown strategy '" + name + "' (expected random | conf | coreset | badge)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::conf: return "conf";
    case Strategy::coreset: return "coreset";
    case Strategy::badge: return "badge";
  }
  return "?";
}

std::vector<SampleId> random_select(const AcquisitionRequest& req) {
  check_budget(req);
  std::vector<SampleId> ids = req.pool.unlabeled_ids();
  Rng rng = make_stream(req.seed, "random_select");
  for (std::size_t i = 0; i < req.k; ++i) std::swap(ids[i], ids[i + uniform_index(rng, ids.size() - i)]);
  ids.resize(req.k);
  return ids;
}

std::vector<SampleId> conf_select(const AcquisitionRequest& req) {
  check_budget(req);
  const std::vector<SampleId> ids = req.pool.unlabeled_ids();
  const auto out = forward_batch(req.model, req.data.gather(ids));
  const Eigen::VectorXd confidence = out.probs.colwise().maxCoeff().transpose();

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // ids are ascending, so a stable sort breaks ties by id.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return confidence(static_cast<Eigen::Index>(a)) < confidence(static_cast<Eigen::Index>(b));
  });
  std::vector<SampleId> chosen;
  chosen.reserve(req.k);
  for (std::size_t i = 0; i < req.k; ++i) chosen.push_back(ids[order[i]]);
  return chosen;
}

std::vector<Eigen::Index> furthest_first(const Matrix& centers, const Matrix& candidates, std::size_t k) {
  if (centers.cols() == 0) throw PreconditionError("furthest-first traversal needs at least one center");
  if (static_cast<Eigen::Index>(k) > candidates.cols()) throw BudgetError("more picks requested than candidates");

  Eigen::VectorXd min_dist(candidates.cols());
  for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
    min_dist(j) = (centers.colwise() - candidates.col(j)).colwise().squaredNorm().minCoeff();
  }
  std::vector<bool> taken(static_cast<std::size_t>(candidates.cols()), false);
  std::vector<Eigen::Index> picks;
  picks.reserve(k);
  while (picks.size() < k) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < candidates.cols(); ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || min_dist(j) > min_dist(best)) best = j;
    }
    taken[static_cast<std::size_t>(best)] = true;
    picks.push_back(best);
    const Eigen::VectorXd d = (candidates.colwise() - candidates.col(best)).colwise().squaredNorm().transpose();
    min_dist = min_dist.cwiseMin(d);
  }
  return picks;
}

std::vector<SampleId> coreset_select(const AcquisitionRequest& req) {
  check_budget(req);
  if (req.pool.labeled.empty()) throw PreconditionError("coreset selection needs a non-empty labeled pool");
  const std::vector<SampleId> labeled = req.pool.labeled_ids();
  const std::vector<SampleId> unlabeled = req.pool.unlabeled_ids();
  const Matrix centers = forward_batch(req.model, req.data.gather(labeled)).penult;
  const Matrix candidates = forward_batch(req.model, req.data.gather(unlabeled)).penult;

  std::vector<SampleId> chosen;
  for (Eigen::Index j : furthest_first(centers, candidates, req.k)) chosen.push_back(unlabeled[static_cast<std::size_t>(j)]);
  return chosen;
}

Matrix gradient_embeddings(const Model& model, const Matrix& X) {
  const auto out = forward_batch(model, X);
  const Eigen::Index h = out.penult.rows();
  const Eigen::Index c = out.probs.rows();
  Matrix g(c * h, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd delta = out.probs.col(j);
    delta(argmax(out.probs.col(j))) -= 1.0;
    for (Eigen::Index cls = 0; cls < c; ++cls) g.col(j).segment(cls * h, h) = delta(cls) * out.penult.col(j);
  }
  return g;
}

std::vector<SampleId> badge_select(const AcquisitionRequest& req) {
  check_budget(req);
  const std::vector<SampleId> ids = req.pool.unlabeled_ids();
  const Matrix g = gradient_embeddings(req.model, req.data.gather(ids));
  Rng rng = make_stream(req.seed, "badge_select");
  std::vector<SampleId> chosen;
  for (Eigen::Index j : kmeanspp_seed(g, req.k, rng, FirstCenter::squared_norm)) {
    chosen.push_back(ids[static_cast<std::size_t>(j)]);
  }
  return chosen;
}

std::vector<SampleId> select(Strategy strategy, const AcquisitionRequest& req) {
  switch (strategy) {
    case Strategy::random: return random_select(req);
    case Strategy::conf: return conf_select(req);
    case Strategy::coreset: return coreset_select(req);
    case Strategy::badge: return badge_select(req);
  }
  throw ArgumentError("unknown strategy");
}

}  // namespace distal
