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

#include "xcmine/fusion.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "xcmine/binio.h"

namespace xcm {
namespace {

constexpr std::string_view kFusionMagic = "XCMFUS01";
constexpr std::uint32_t kFusionVersion = 1;

struct Split {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double sse = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FusionPair>& pairs, const TreeOptions& o)
      : pairs_(pairs), opt_(o) {}

  std::vector<FusionModel::Node> build() {
    std::vector<std::uint32_t> idx(pairs_.size());
    std::iota(idx.begin(), idx.end(), 0u);
    grow(idx, 0);
    return std::move(nodes_);
  }

 private:
  static double sse_of(double sum, double sumsq, double n) {
    return std::max(0.0, sumsq - sum * sum / n);
  }

  std::uint32_t grow(std::vector<std::uint32_t>& idx, std::size_t depth) {
    double sum = 0.0, sumsq = 0.0;
    for (auto i : idx) {
      sum += pairs_[i].target;
      sumsq += pairs_[i].target * pairs_[i].target;
    }
    const double n = static_cast<double>(idx.size());
    const double node_sse = sse_of(sum, sumsq, n);

    const auto self = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({-1, 0.0, sum / n, 0, 0});
    if (depth >= opt_.max_depth || node_sse <= 0.0 ||
        idx.size() < 2 * std::max<std::size_t>(1, opt_.min_leaf)) {
      return self;
    }
    const Split s = best_split(idx, node_sse);
    if (!s.found) return self;

    std::vector<std::uint32_t> left, right;
    for (auto i : idx) {
      (pairs_[i].d.feature(s.feature) <= s.threshold ? left : right)
          .push_back(i);
    }
    nodes_[self].feature = s.feature;
    nodes_[self].threshold = s.threshold;
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  Split best_split(const std::vector<std::uint32_t>& idx,
                   double node_sse) const {
    const std::size_t min_leaf = std::max<std::size_t>(1, opt_.min_leaf);
    Split best;
    best.sse = node_sse;
    std::vector<std::uint32_t> order = idx;
    for (int f = 0; f < static_cast<int>(Descriptor::kNumFeatures); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return pairs_[a].d.feature(f) < pairs_[b].d.feature(f);
                       });
      double total = 0.0, total_sq = 0.0;
      for (auto i : order) {
        total += pairs_[i].target;
        total_sq += pairs_[i].target * pairs_[i].target;
      }
      double ls = 0.0, lsq = 0.0;
      const std::size_t n = order.size();
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const double t = pairs_[order[k]].target;
        ls += t;
        lsq += t * t;
        const std::size_t nl = k + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double a = pairs_[order[k]].d.feature(f);
        const double b = pairs_[order[k + 1]].d.feature(f);
        if (!(a < b)) continue;
        const double sse = sse_of(ls, lsq, static_cast<double>(nl)) +
                           sse_of(total - ls, total_sq - lsq,
                                  static_cast<double>(nr));
        if (sse < best.sse - 1e-12) {
          double thr = a + (b - a) / 2.0;
          if (!(thr < b)) thr = a;
          best = {true, f, thr, sse};
        }
      }
    }
    return best;
  }

  const std::vector<FusionPair>& pairs_;
  TreeOptions opt_;
  std::vector<FusionModel::Node> nodes_;
};

std::size_t depth_from(const std::vector<FusionModel::Node>& nodes,
                       std::uint32_t at) {
  const auto& n = nodes[at];
  if (n.feature < 0) return 0;
  return 1 + std::max(depth_from(nodes, n.left), depth_from(nodes, n.right));
}

// Rebuilds child links from a preorder listing; returns the next free slot.
std::uint32_t link_preorder(std::vector<FusionModel::Node>& nodes,
                            std::uint32_t at, std::size_t depth) {
  if (at >= nodes.size()) throw FormatError("fusion model: truncated tree");
  if (depth > 64) throw FormatError("fusion model: tree too deep");
  auto& n = nodes[at];
  if (n.feature < 0) return at + 1;
  if (n.feature >= static_cast<int>(Descriptor::kNumFeatures)) {
    throw FormatError("fusion model: bad feature index");
  }
  n.left = at + 1;
  const auto next = link_preorder(nodes, n.left, depth + 1);
  nodes[at].right = next;
  return link_preorder(nodes, next, depth + 1);
}

}  // namespace

FusionModel::FusionModel(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

double FusionModel::predict(const Descriptor& d) const {
  if (nodes_.empty()) return 0.0;
  std::uint32_t at = 0;
  while (nodes_[at].feature >= 0) {
    const auto& n = nodes_[at];
    at = d.feature(static_cast<std::size_t>(n.feature)) <= n.threshold
             ? n.left
             : n.right;
  }
  return nodes_[at].value;
}

std::size_t FusionModel::depth() const {
  return nodes_.empty() ? 0 : depth_from(nodes_, 0);
}

std::size_t FusionModel::num_leaves() const {
  std::size_t n = 0;
  for (const auto& x : nodes_) n += x.feature < 0;
  return n;
}

FusionModel fit_tree(const std::vector<FusionPair>& pairs,
                     const TreeOptions& options) {
  if (pairs.empty()) throw ConfigError("fit_tree needs at least one pair");
  return FusionModel(TreeBuilder(pairs, options).build());
}

double squared_error(const FusionModel& m,
                     const std::vector<FusionPair>& pairs) {
  double s = 0.0;
  for (const auto& p : pairs) {
    const double e = m.predict(p.d) - p.target;
    s += e * e;
  }
  return s;
}

void save_fusion(const std::string& path, const FusionModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::put_magic(out, kFusionMagic);
  binio::put<std::uint32_t>(out, kFusionVersion);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(m.num_nodes()));
  for (const auto& n : m.nodes()) {
    binio::put<std::int32_t>(out, n.feature);
    binio::put<double>(out, n.threshold);
    binio::put<double>(out, n.value);
  }
  if (!out) throw FormatError("failed writing " + path);
}

FusionModel load_fusion(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  binio::expect_magic(in, kFusionMagic, path);
  const auto version = binio::get<std::uint32_t>(in, path);
  if (version != kFusionVersion) {
    throw FormatError(path + ": unsupported fusion version " +
                      std::to_string(version));
  }
  const auto count = binio::get<std::uint32_t>(in, path);
  std::vector<FusionModel::Node> nodes(count);
  for (auto& n : nodes) {
    n.feature = binio::get<std::int32_t>(in, path);
    n.threshold = binio::get<double>(in, path);
    n.value = binio::get<double>(in, path);
  }
  if (!nodes.empty() && link_preorder(nodes, 0, 0) != nodes.size()) {
    throw FormatError(path + ": trailing fusion nodes");
  }
  return FusionModel(std::move(nodes));
}

}  // namespace xcm
