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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xcmine/common.h"

namespace xcm {

struct ScoredId {
  std::uint32_t id = 0;
  double score = 0.0;
  bool operator==(const ScoredId&) const = default;
};

// Descending score, ascending id on ties.
inline bool ranks_before(const ScoredId& a, const ScoredId& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

enum class IndexMode { kExact, kApproximate };

struct IndexOptions {
  IndexMode mode = IndexMode::kExact;
  std::size_t degree = 24;    // links per insertion; adjacency capped at 2x
  std::size_t breadth = 128;  // beam width for search and construction
  std::uint64_t seed = 0;

  // Exact below 50k vectors, approximate above.
  static IndexOptions Auto(std::size_t num_vectors);
};

// Maximum-inner-product index over unit-norm vectors. On the sphere MIPS,
// cosine and Euclidean nearest-neighbour search coincide. Immutable after
// construction; queries may run concurrently.
class MipsIndex {
 public:
  // Throws NormError if any row deviates from unit norm by more than 1e-4.
  MipsIndex(Matrix vectors, IndexOptions options = {});

  std::size_t size() const { return vectors_.rows(); }
  std::size_t dim() const { return vectors_.cols(); }
  IndexMode mode() const { return options_.mode; }
  const Matrix& vectors() const { return vectors_; }

  // Top-k by inner product, best first. k > size() returns size() results.
  std::vector<ScoredId> query(std::span<const double> q, std::size_t k) const;

  // Graph adjacency (empty in exact mode).
  const std::vector<std::vector<std::uint32_t>>& graph() const {
    return graph_;
  }

 private:
  std::vector<ScoredId> exact_query(std::span<const double> q,
                                    std::size_t k) const;
  std::vector<ScoredId> beam_search(std::span<const double> q,
                                    std::size_t breadth,
                                    std::size_t limit) const;
  void build_graph();

  Matrix vectors_;
  IndexOptions options_;
  std::vector<std::vector<std::uint32_t>> graph_;
  std::vector<std::uint32_t> entry_points_;
};

// Fraction of exact top-k ids recovered by the approximate results, averaged
// over queries (rows of `queries`).
double recall_at_k(const MipsIndex& approx, const MipsIndex& exact,
                   const Matrix& queries, std::size_t k);

// Dump in the classifier-bank binary layout (magic "XCMIDX01").
void save_index_vectors(const std::string& path, const MipsIndex& index);

}  // namespace xcm
