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

#include "xcmine/ann.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>
#include <unordered_set>

#include "xcmine/binio.h"

namespace xcm {
namespace {

constexpr std::size_t kApproximateThreshold = 50000;
constexpr std::size_t kNumEntryPoints = 8;
constexpr double kNormTolerance = 1e-4;

struct WorstFirst {
  bool operator()(const ScoredId& a, const ScoredId& b) const {
    return ranks_before(a, b);
  }
};
struct BestFirst {
  bool operator()(const ScoredId& a, const ScoredId& b) const {
    return ranks_before(b, a);
  }
};

}  // namespace

IndexOptions IndexOptions::Auto(std::size_t num_vectors) {
  IndexOptions o;
  o.mode = num_vectors < kApproximateThreshold ? IndexMode::kExact
                                               : IndexMode::kApproximate;
  return o;
}

MipsIndex::MipsIndex(Matrix vectors, IndexOptions options)
    : vectors_(std::move(vectors)), options_(options) {
  if (vectors_.rows() == 0) throw ConfigError("index needs >= 1 vector");
  for (std::size_t r = 0; r < vectors_.rows(); ++r) {
    const double n = norm2(vectors_.row(r));
    if (!(std::abs(n - 1.0) <= kNormTolerance)) {
      throw NormError("index vector " + std::to_string(r) + " has norm " +
                      std::to_string(n));
    }
  }
  if (options_.mode == IndexMode::kApproximate) {
    if (options_.degree < 1 || options_.breadth < 1) {
      throw ConfigError("graph degree and breadth must be >= 1");
    }
    build_graph();
  }
}

std::vector<ScoredId> MipsIndex::query(std::span<const double> q,
                                       std::size_t k) const {
  if (q.size() != dim()) {
    throw ConfigError("query has dimension " + std::to_string(q.size()) +
                      ", index has " + std::to_string(dim()));
  }
  if (k == 0) return {};
  k = std::min(k, size());
  if (options_.mode == IndexMode::kExact) return exact_query(q, k);
  auto res = beam_search(q, std::max(options_.breadth, k), size());
  if (res.size() > k) res.resize(k);
  return res;
}

std::vector<ScoredId> MipsIndex::exact_query(std::span<const double> q,
                                             std::size_t k) const {
  std::vector<ScoredId> all(size());
  for (std::uint32_t r = 0; r < size(); ++r) {
    all[r] = {r, dot(vectors_.row(r), q)};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), ranks_before);
  all.resize(k);
  return all;
}

// Greedy best-first search over the first `limit` inserted nodes.
std::vector<ScoredId> MipsIndex::beam_search(std::span<const double> q,
                                             std::size_t breadth,
                                             std::size_t limit) const {
  std::vector<char> visited(limit, 0);
  std::priority_queue<ScoredId, std::vector<ScoredId>, BestFirst> frontier;
  std::priority_queue<ScoredId, std::vector<ScoredId>, WorstFirst> best;
  for (auto e : entry_points_) {
    if (e >= limit || visited[e]) continue;
    visited[e] = 1;
    ScoredId s{e, dot(vectors_.row(e), q)};
    frontier.push(s);
    best.push(s);
    if (best.size() > breadth) best.pop();
  }
  while (!frontier.empty()) {
    const ScoredId cur = frontier.top();
    frontier.pop();
    if (best.size() >= breadth && ranks_before(best.top(), cur)) break;
    for (auto nb : graph_[cur.id]) {
      if (nb >= limit || visited[nb]) continue;
      visited[nb] = 1;
      ScoredId s{nb, dot(vectors_.row(nb), q)};
      if (best.size() < breadth || ranks_before(s, best.top())) {
        frontier.push(s);
        best.push(s);
        if (best.size() > breadth) best.pop();
      }
    }
  }
  std::vector<ScoredId> out;
  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top());
    best.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

void MipsIndex::build_graph() {
  const std::size_t n = size();
  const std::size_t max_links = 2 * options_.degree;
  graph_.assign(n, {});
  entry_points_.clear();

  // Entry points are spread over the insertion order so early searches
  // already have one available.
  Rng rng(options_.seed);
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  shuffle(perm, rng);
  Matrix reordered(n, dim());
  for (std::size_t r = 0; r < n; ++r) {
    auto src = vectors_.row(perm[r]);
    std::copy(src.begin(), src.end(), reordered.row(r).begin());
  }
  // Build over the shuffled order, then map ids back.
  std::swap(vectors_, reordered);
  entry_points_.push_back(0);

  for (std::uint32_t v = 1; v < n; ++v) {
    auto cand = beam_search(vectors_.row(v), options_.breadth, v);
    if (cand.size() > options_.degree) cand.resize(options_.degree);
    for (const auto& c : cand) {
      graph_[v].push_back(c.id);
      auto& back = graph_[c.id];
      back.push_back(v);
      if (back.size() > max_links) {
        auto anchor = vectors_.row(c.id);
        std::vector<ScoredId> scored;
        scored.reserve(back.size());
        for (auto b : back) scored.push_back({b, dot(vectors_.row(b), anchor)});
        std::sort(scored.begin(), scored.end(), ranks_before);
        back.clear();
        for (std::size_t k = 0; k < max_links; ++k) {
          back.push_back(scored[k].id);
        }
      }
    }
    if (entry_points_.size() < kNumEntryPoints &&
        v % std::max<std::size_t>(1, n / kNumEntryPoints) == 0) {
      entry_points_.push_back(v);
    }
  }

  // Undo the shuffle: position r holds original id perm[r].
  std::swap(vectors_, reordered);
  std::vector<std::vector<std::uint32_t>> remapped(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& adj = remapped[perm[r]];
    adj.reserve(graph_[r].size());
    for (auto nb : graph_[r]) adj.push_back(perm[nb]);
  }
  graph_ = std::move(remapped);
  for (auto& e : entry_points_) e = perm[e];
}

double recall_at_k(const MipsIndex& approx, const MipsIndex& exact,
                   const Matrix& queries, std::size_t k) {
  if (queries.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    const auto truth = exact.query(queries.row(r), k);
    const auto got = approx.query(queries.row(r), k);
    std::unordered_set<std::uint32_t> ids;
    for (const auto& g : got) ids.insert(g.id);
    std::size_t hit = 0;
    for (const auto& t : truth) hit += ids.count(t.id);
    total += static_cast<double>(hit) / static_cast<double>(truth.size());
  }
  return total / static_cast<double>(queries.rows());
}

void save_index_vectors(const std::string& path, const MipsIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::put_magic(out, "XCMIDX01");
  binio::put<std::uint32_t>(out, 1);
  binio::put<std::uint64_t>(out, index.size());
  binio::put<std::uint64_t>(out, index.dim());
  for (double v : index.vectors().data()) {
    binio::put<float>(out, static_cast<float>(v));
  }
}

}  // namespace xcm
