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

#include "xcmine/clustering.h"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace xcm {
namespace {

using Rows = std::vector<std::uint32_t>;

// Splits rows (sorted) into two halves of sizes ceil(n/2) and floor(n/2).
std::pair<Rows, Rows> split_node(const Matrix& x, const Rows& rows,
                                 std::uint64_t seed) {
  const std::size_t n = rows.size();
  const std::size_t dim = x.cols();
  const std::size_t first_size = (n + 1) / 2;

  auto row = [&](std::size_t k) { return x.row(rows[k]); };

  SplitMix64 rng(seed);
  const auto seed_pos = uniform_index(rng, n);
  std::vector<double> c1(row(seed_pos).begin(), row(seed_pos).end());
  // Second centroid: the row least similar to the first (lowest id on ties).
  // The same pass accumulates the node total.
  std::vector<double> total(dim, 0.0);
  std::size_t far_pos = 0;
  double far_dot = 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto v = row(k);
    for (std::size_t j = 0; j < dim; ++j) total[j] += v[j];
    const double d = dot(v, c1);
    if (d < far_dot) {
      far_dot = d;
      far_pos = k;
    }
  }
  std::vector<double> c2(row(far_pos).begin(), row(far_pos).end());

  struct Keyed {
    double score;  // x.c1 - x.c2
    std::uint32_t pos;
  };
  // Strict total order: larger score first, then lower position.
  auto ahead = [](const Keyed& a, const Keyed& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.pos < b.pos;
  };
  std::vector<Keyed> keyed(n);
  std::vector<double> delta(dim), s1(dim), s2(dim);
  std::vector<char> side(n, 2), prev(n, 2);
  for (int it = 0; it < kSplitIterations; ++it) {
    for (std::size_t j = 0; j < dim; ++j) delta[j] = c1[j] - c2[j];
    for (std::size_t k = 0; k < n; ++k) {
      keyed[k] = {dot(row(k), delta), static_cast<std::uint32_t>(k)};
    }
    // Only membership of the top half matters, so a selection suffices.
    std::nth_element(keyed.begin(), keyed.begin() + first_size, keyed.end(),
                     ahead);
    for (std::size_t k = 0; k < n; ++k) {
      side[keyed[k].pos] = k < first_size ? 0 : 1;
    }
    if (side == prev) break;
    prev = side;
    // Sum the first side only; the second is the node total minus it.
    std::fill(s1.begin(), s1.end(), 0.0);
    for (std::size_t k = 0; k < first_size; ++k) {
      const auto v = row(keyed[k].pos);
      for (std::size_t j = 0; j < dim; ++j) s1[j] += v[j];
    }
    for (std::size_t j = 0; j < dim; ++j) s2[j] = total[j] - s1[j];
    if (normalize(s1) > 0.0) c1 = s1;
    if (normalize(s2) > 0.0) c2 = s2;
  }
  Rows first, second;
  first.reserve(first_size);
  second.reserve(n - first_size);
  for (std::size_t k = 0; k < n; ++k) {
    (side[k] == 0 ? first : second).push_back(rows[k]);
  }
  return {std::move(first), std::move(second)};
}

}  // namespace

std::size_t Clustering::max_cluster_size() const {
  std::size_t m = 0;
  for (const auto& c : members) m = std::max(m, c.size());
  return m;
}

std::size_t Clustering::min_cluster_size() const {
  if (members.empty()) return 0;
  std::size_t m = members.front().size();
  for (const auto& c : members) m = std::min(m, c.size());
  return m;
}

Clustering Clustering::from_assignment(std::vector<std::uint32_t> assignment,
                                       std::size_t num_clusters) {
  Clustering c;
  c.members.resize(num_clusters);
  for (std::uint32_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] >= num_clusters) {
      throw RangeError("cluster id " + std::to_string(assignment[r]) +
                       " >= " + std::to_string(num_clusters));
    }
    c.members[assignment[r]].push_back(r);
  }
  c.assignment = std::move(assignment);
  return c;
}

Clustering singleton_clustering(std::size_t n) {
  std::vector<std::uint32_t> a(n);
  std::iota(a.begin(), a.end(), 0u);
  return Clustering::from_assignment(std::move(a), n);
}

std::size_t split_depth(std::size_t n, std::size_t target_cluster_size) {
  if (target_cluster_size == 0) {
    throw ConfigError("cluster size must be >= 1");
  }
  const std::size_t k = (n + target_cluster_size - 1) / target_cluster_size;
  std::size_t depth = 0;
  while ((std::size_t{1} << depth) < k) ++depth;
  return depth;
}

Clustering balanced_cluster(const Matrix& embeddings,
                            std::size_t target_cluster_size,
                            std::uint64_t seed) {
  const std::size_t n = embeddings.rows();
  if (n == 0) throw ConfigError("cannot cluster zero points");
  const std::size_t depth = split_depth(n, target_cluster_size);

  std::vector<Rows> level(1);
  level[0].resize(n);
  std::iota(level[0].begin(), level[0].end(), 0u);
  for (std::size_t d = 0; d < depth; ++d) {
    std::vector<std::pair<Rows, Rows>> halves(level.size());
    parallel_for(level.size(), [&](std::size_t k) {
      if (level[k].size() < 2) {
        halves[k].first = level[k];
        return;
      }
      halves[k] = split_node(embeddings, level[k],
                             derive_seed(seed, (d << 32) | k));
    });
    std::vector<Rows> next;
    next.reserve(level.size() * 2);
    for (auto& h : halves) {
      next.push_back(std::move(h.first));
      if (!h.second.empty()) next.push_back(std::move(h.second));
    }
    level = std::move(next);
  }

  std::vector<std::uint32_t> assignment(n);
  for (std::uint32_t c = 0; c < level.size(); ++c) {
    for (auto r : level[c]) assignment[r] = c;
  }
  return Clustering::from_assignment(std::move(assignment), level.size());
}

double clustering_goodness(const Matrix& embeddings, const Clustering& c,
                           double radius, const GoodnessMode& mode) {
  const std::size_t n = embeddings.rows();
  if (c.num_points() != n) {
    throw ConfigError("clustering covers " + std::to_string(c.num_points()) +
                      " rows, embeddings have " + std::to_string(n));
  }
  if (n == 0) return 0.0;
  if (mode.exact) {
    if (n > mode.exact_cap) {
      throw ConfigError("exact clustering goodness limited to " +
                        std::to_string(mode.exact_cap) + " points, got " +
                        std::to_string(n));
    }
    std::vector<std::uint64_t> per_row(n, 0);
    parallel_for(n, [&](std::size_t i) {
      std::uint64_t cnt = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (c.assignment[i] == c.assignment[j]) continue;
        if (unit_distance(embeddings.row(i), embeddings.row(j)) <= radius) {
          ++cnt;
        }
      }
      per_row[i] = cnt;
    });
    std::uint64_t total = 0;
    for (auto v : per_row) total += v;
    return static_cast<double>(total) /
           (static_cast<double>(n) * static_cast<double>(n));
  }
  if (mode.samples == 0) return 0.0;
  Rng rng(mode.seed);
  std::uint64_t hits = 0;
  for (std::size_t s = 0; s < mode.samples; ++s) {
    const auto i = uniform_index(rng, n);
    const auto j = uniform_index(rng, n);
    if (c.assignment[i] != c.assignment[j] &&
        unit_distance(embeddings.row(i), embeddings.row(j)) <= radius) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(mode.samples);
}

void write_clustering(const std::string& path, const Clustering& c) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  for (std::size_t i = 0; i < c.assignment.size(); ++i) {
    out << i << ' ' << c.assignment[i] << '\n';
  }
}

}  // namespace xcm
