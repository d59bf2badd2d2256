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

// Negative-mining-aware mini-batching.
//
// Points are grouped into clusters of nearby embeddings and every mini-batch
// is a union of whole clusters. Hard negatives for a point are then taken
// from the positives of the other points in its batch, restricted to labels
// within a radius of the point. The baseline strategies used for comparison
// live here as well: uniform in-batch sampling, one-off static clustering and
// periodic global nearest-neighbour refresh.

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "xcmine/ann.h"
#include "xcmine/clustering.h"
#include "xcmine/common.h"

namespace xcm {

enum class MinerStrategy { kNgame, kUniform, kStaticCluster, kAnnsRefresh };

MinerStrategy parse_strategy(const std::string& s);
std::string to_string(MinerStrategy s);

inline constexpr std::size_t kUncapped = std::numeric_limits<std::size_t>::max();

struct Curriculum {
  bool enabled = false;
  std::size_t doubling_period = 25;  // epochs
  std::size_t max_cluster_size = 64;
};

struct MinerConfig {
  std::size_t batch_size = 64;       // S
  std::size_t cluster_size = 8;      // C
  std::size_t refresh_interval = 5;  // tau, in epochs
  double radius = 2.0;               // r
  std::size_t max_negatives = 5;     // H
  Curriculum curriculum;
  MinerStrategy strategy = MinerStrategy::kNgame;

  // Throws ConfigError unless S >= C >= 1, tau >= 1, r in (0, 2], H >= 1 and
  // (with curriculum) S >= max cluster size.
  void validate() const;
};

// One epoch worth of batches; every point appears exactly once.
struct MiniBatchPlan {
  std::vector<std::vector<std::uint32_t>> batches;
  std::size_t num_points() const;
};

// Permutes clusters by seed and packs them greedily into batches of at most
// S points, so each batch is a union of whole clusters and each cluster is
// used exactly once. `ids` maps clustering rows to output ids (identity when
// empty). Throws ConfigError if S is smaller than the largest cluster.
MiniBatchPlan plan_epoch(const Clustering& clustering, std::size_t batch_size,
                         std::uint64_t seed,
                         std::span<const std::uint32_t> ids = {});

// Uniform in-batch sampling over `ids`: a seeded permutation chopped into
// batches of S. Structurally this is plan_epoch over singleton clusters.
MiniBatchPlan uniform_plan(std::span<const std::uint32_t> ids,
                           std::size_t batch_size, std::uint64_t seed);

// Per batch point, label ids from the pool within `radius` that are not
// positives of that point, sorted by ascending distance (ascending id on
// ties) and truncated to `max_negatives`.
using HardNegatives = std::vector<std::vector<LabelId>>;

// point_emb: one row per batch point. pool_emb: one row per pool label,
// pool_ids[r] naming row r. positives[i]: sorted positive label ids of batch
// point i.
HardNegatives select_hard_negatives(
    const Matrix& point_emb, const Matrix& pool_emb,
    std::span<const LabelId> pool_ids,
    std::span<const std::vector<LabelId>> positives, double radius,
    std::size_t max_negatives);

// Sorted union of the positive sets of `batch`.
std::vector<LabelId> batch_label_pool(
    std::span<const std::uint32_t> batch,
    const std::vector<std::vector<LabelId>>& point_labels);

// C * 2^floor(epoch / doubling_period), clamped to max_cluster_size.
std::size_t curriculum_cluster_size(std::size_t base, std::size_t epoch,
                                    std::size_t doubling_period,
                                    std::size_t max_cluster_size);

// Global hard negatives: for each point row, the top-H labels of `index`
// (built over all label embeddings) excluding the point's positives.
HardNegatives anns_refresh_negatives(
    const Matrix& point_emb, const MipsIndex& index,
    std::span<const std::vector<LabelId>> positives, std::size_t max_negatives);

struct OverheadReport {
  MinerStrategy strategy = MinerStrategy::kNgame;
  double epoch_seconds = 0.0;     // mean training time per epoch
  double sampling_seconds = 0.0;  // mean mining overhead per epoch
  double fraction_increase = 1.0;
};

struct OverheadTimings {
  double train_seconds = 0.0;     // summed over epochs
  double sampling_seconds = 0.0;  // summed over epochs
  std::size_t epochs = 0;
  double baseline_epoch_seconds = 0.0;  // vanilla in-batch epoch time
};

// fraction_increase = (epoch + sampling) / baseline epoch.
OverheadReport overhead_report(MinerStrategy strategy,
                               const OverheadTimings& t);

}  // namespace xcm
