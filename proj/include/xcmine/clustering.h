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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xcmine/common.h"

namespace xcm {

// A partition of rows [0, N) into non-empty clusters.
struct Clustering {
  std::vector<std::uint32_t> assignment;           // row -> cluster
  std::vector<std::vector<std::uint32_t>> members;  // cluster -> rows, sorted

  std::size_t num_clusters() const { return members.size(); }
  std::size_t num_points() const { return assignment.size(); }
  std::size_t max_cluster_size() const;
  std::size_t min_cluster_size() const;

  // Rebuilds members from assignment.
  static Clustering from_assignment(std::vector<std::uint32_t> assignment,
                                    std::size_t num_clusters);
};

// Every row in its own cluster, cluster id == row id.
Clustering singleton_clustering(std::size_t n);

// Split depth used for N rows at target cluster size C:
// ceil(log2(ceil(N / C))). C > N clamps to depth 0.
std::size_t split_depth(std::size_t n, std::size_t target_cluster_size);

constexpr int kSplitIterations = 20;

// Balanced hierarchical spherical 2-means over unit-norm rows. Each node is
// split in two halves whose sizes differ by at most one by ranking rows on
// <x, c1> - <x, c2>; nodes of a single row are not split. Deterministic
// under seed.
Clustering balanced_cluster(const Matrix& embeddings,
                            std::size_t target_cluster_size,
                            std::uint64_t seed);

struct GoodnessMode {
  bool exact = true;
  std::size_t samples = 0;  // ordered pairs drawn in sampled mode
  std::uint64_t seed = 0;
  std::size_t exact_cap = 5000;

  static GoodnessMode Exact(std::size_t cap = 5000) {
    return {true, 0, 0, cap};
  }
  static GoodnessMode Sampled(std::size_t m, std::uint64_t seed) {
    return {false, m, seed, 0};
  }
};

// Fraction of ordered pairs (i, j), i == j included, with
// |e_i - e_j| <= radius and c(i) != c(j). Exact mode throws ConfigError above
// exact_cap rows.
double clustering_goodness(const Matrix& embeddings, const Clustering& c,
                           double radius, const GoodnessMode& mode);

// "point_id cluster_id" per line.
void write_clustering(const std::string& path, const Clustering& c);

}  // namespace xcm
