// Copyright 2026 The xcmine Authors.
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

#include "xcmine/negmine.h"

#include <algorithm>
#include <numeric>

namespace xcm {

MinerStrategy parse_strategy(const std::string& s) {
  if (s == "ngame") return MinerStrategy::kNgame;
  if (s == "uniform") return MinerStrategy::kUniform;
  if (s == "static_cluster") return MinerStrategy::kStaticCluster;
  if (s == "anns_refresh") return MinerStrategy::kAnnsRefresh;
  throw ConfigError("unknown miner strategy '" + s + "'");
}

std::string to_string(MinerStrategy s) {
  switch (s) {
    case MinerStrategy::kNgame:
      return "ngame";
    case MinerStrategy::kUniform:
      return "uniform";
    case MinerStrategy::kStaticCluster:
      return "static_cluster";
    case MinerStrategy::kAnnsRefresh:
      return "anns_refresh";
  }
  return "?";
}

void MinerConfig::validate() const {
  if (cluster_size < 1) throw ConfigError("miner.cluster_size must be >= 1");
  if (batch_size < cluster_size) {
    throw ConfigError("miner.batch_size must be >= miner.cluster_size");
  }
  if (refresh_interval < 1) {
    throw ConfigError("miner.refresh_interval must be >= 1");
  }
  if (!(radius > 0.0 && radius <= 2.0)) {
    throw ConfigError("miner.radius must lie in (0, 2]");
  }
  if (max_negatives < 1) throw ConfigError("miner.max_negatives must be >= 1");
  if (curriculum.enabled) {
    if (curriculum.doubling_period < 1) {
      throw ConfigError("curriculum doubling period must be >= 1");
    }
    if (curriculum.max_cluster_size > batch_size) {
      throw ConfigError(
          "curriculum max cluster size must not exceed the batch size");
    }
  }
}

std::size_t MiniBatchPlan::num_points() const {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.size();
  return n;
}

MiniBatchPlan plan_epoch(const Clustering& clustering, std::size_t batch_size,
                         std::uint64_t seed,
                         std::span<const std::uint32_t> ids) {
  if (clustering.max_cluster_size() > batch_size) {
    throw ConfigError("batch size " + std::to_string(batch_size) +
                      " is smaller than the largest cluster (" +
                      std::to_string(clustering.max_cluster_size()) + ")");
  }
  if (!ids.empty() && ids.size() != clustering.num_points()) {
    throw ConfigError("id map does not cover the clustering");
  }
  std::vector<std::uint32_t> order(clustering.num_clusters());
  std::iota(order.begin(), order.end(), 0u);
  Rng rng(seed);
  shuffle(order, rng);

  MiniBatchPlan plan;
  std::vector<std::uint32_t> current;
  for (auto c : order) {
    const auto& members = clustering.members[c];
    if (current.size() + members.size() > batch_size) {
      plan.batches.push_back(std::move(current));
      current.clear();
    }
    for (auto r : members) current.push_back(ids.empty() ? r : ids[r]);
  }
  if (!current.empty()) plan.batches.push_back(std::move(current));
  return plan;
}

MiniBatchPlan uniform_plan(std::span<const std::uint32_t> ids,
                           std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  return plan_epoch(singleton_clustering(ids.size()), batch_size, seed, ids);
}

std::vector<LabelId> batch_label_pool(
    std::span<const std::uint32_t> batch,
    const std::vector<std::vector<LabelId>>& point_labels) {
  std::vector<LabelId> pool;
  for (auto i : batch) {
    pool.insert(pool.end(), point_labels[i].begin(), point_labels[i].end());
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

HardNegatives select_hard_negatives(
    const Matrix& point_emb, const Matrix& pool_emb,
    std::span<const LabelId> pool_ids,
    std::span<const std::vector<LabelId>> positives, double radius,
    std::size_t max_negatives) {
  if (pool_emb.rows() != pool_ids.size()) {
    throw ConfigError("pool embeddings and pool ids disagree in size");
  }
  if (positives.size() != point_emb.rows()) {
    throw ConfigError("positives must be given for every batch point");
  }
  HardNegatives out(point_emb.rows());
  parallel_for(point_emb.rows(), [&](std::size_t i) {
    struct Cand {
      double dist;
      LabelId id;
    };
    std::vector<Cand> cands;
    const auto& pos = positives[i];
    for (std::size_t r = 0; r < pool_ids.size(); ++r) {
      const LabelId l = pool_ids[r];
      if (std::binary_search(pos.begin(), pos.end(), l)) continue;
      const double d = unit_distance(point_emb.row(i), pool_emb.row(r));
      if (d <= radius) cands.push_back({d, l});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.dist != b.dist) return a.dist < b.dist;
      return a.id < b.id;
    });
    const std::size_t keep = std::min(cands.size(), max_negatives);
    out[i].reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) out[i].push_back(cands[k].id);
  });
  return out;
}

std::size_t curriculum_cluster_size(std::size_t base, std::size_t epoch,
                                    std::size_t doubling_period,
                                    std::size_t max_cluster_size) {
  if (doubling_period < 1) {
    throw ConfigError("curriculum doubling period must be >= 1");
  }
  std::size_t c = base;
  for (std::size_t k = epoch / doubling_period; k > 0; --k) {
    if (c >= max_cluster_size) break;
    c *= 2;
  }
  return std::min(c, max_cluster_size);
}

HardNegatives anns_refresh_negatives(
    const Matrix& point_emb, const MipsIndex& index,
    std::span<const std::vector<LabelId>> positives,
    std::size_t max_negatives) {
  if (positives.size() != point_emb.rows()) {
    throw ConfigError("positives must be given for every point");
  }
  HardNegatives out(point_emb.rows());
  parallel_for(point_emb.rows(), [&](std::size_t i) {
    const auto& pos = positives[i];
    const std::size_t want =
        max_negatives == kUncapped ? index.size()
                                   : std::min(index.size(),
                                              max_negatives + pos.size());
    for (const auto& hit : index.query(point_emb.row(i), want)) {
      if (std::binary_search(pos.begin(), pos.end(), hit.id)) continue;
      if (out[i].size() == max_negatives) break;
      out[i].push_back(hit.id);
    }
  });
  return out;
}

OverheadReport overhead_report(MinerStrategy strategy,
                               const OverheadTimings& t) {
  OverheadReport r;
  r.strategy = strategy;
  if (t.epochs == 0) return r;
  const double n = static_cast<double>(t.epochs);
  r.epoch_seconds = t.train_seconds / n;
  r.sampling_seconds = t.sampling_seconds / n;
  const double base =
      t.baseline_epoch_seconds > 0.0 ? t.baseline_epoch_seconds
                                     : r.epoch_seconds;
  r.fraction_increase =
      base > 0.0 ? (r.epoch_seconds + r.sampling_seconds) / base : 1.0;
  return r;
}

}  // namespace xcm
