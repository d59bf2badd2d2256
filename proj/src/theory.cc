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


#include "xcmine/theory.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace xcm {
namespace {

constexpr double kRelativeSlack = 1e-12;

void require_shapes(const Dataset& data, const Matrix& point_emb,
                    const Matrix& label_emb) {
  if (point_emb.rows() != data.num_points() ||
      label_emb.rows() != data.num_labels() ||
      point_emb.cols() != label_emb.cols()) {
    throw ConfigError("embedding shapes do not match the dataset");
  }
}

bool leq_with_slack(double lhs, double rhs) {
  return lhs <= rhs + kRelativeSlack * std::max(1.0, std::abs(rhs));
}

}  // namespace

double embedding_goodness(const Dataset& data, const Matrix& point_emb,
                          const Matrix& label_emb, double radius) {
  require_shapes(data, point_emb, label_emb);
  std::uint64_t pairs = 0, far = 0;
  for (PointId i = 0; i < data.num_points(); ++i) {
    for (LabelId l : data.positives(i)) {
      ++pairs;
      far += unit_distance(point_emb.row(i), label_emb.row(l)) > radius;
    }
  }
  if (pairs == 0) throw DegenerateInput("no positive pairs");
  return static_cast<double>(far) / static_cast<double>(pairs);
}

BoundConstants bound_constants(const DatasetStats& s) {
  if (s.q_min == 0) {
    throw DegenerateInput("a label has no positive point; constants undefined");
  }
  const double n = static_cast<double>(s.num_points);
  const double l = static_cast<double>(s.num_labels);
  BoundConstants c;
  c.c1 = s.q_bar * (s.mu1 + std::sqrt(s.sigma1_sq) * std::sqrt(l)) / n;
  c.c2 = (s.p_bar + std::sqrt(s.sigma2_sq) * std::sqrt(n)) * n /
         (static_cast<double>(s.q_min) * l);
  return c;
}

HardNegatives full_coverage_negatives(const Dataset& data,
                                      const Matrix& point_emb,
                                      const Matrix& label_emb,
                                      const Clustering& clustering,
                                      double radius) {
  require_shapes(data, point_emb, label_emb);
  HardNegatives out(data.num_points());
  const std::size_t d = point_emb.cols();
  for (const auto& batch : clustering.members) {
    if (batch.empty()) continue;
    const auto pool = batch_label_pool(batch, data.point_labels());
    Matrix pe(batch.size(), d), le(pool.size(), d);
    std::vector<std::vector<LabelId>> pos(batch.size());
    for (std::size_t r = 0; r < batch.size(); ++r) {
      std::copy_n(point_emb.row(batch[r]).begin(), d, pe.row(r).begin());
      pos[r] = data.positives(batch[r]);
    }
    for (std::size_t r = 0; r < pool.size(); ++r) {
      std::copy_n(label_emb.row(pool[r]).begin(), d, le.row(r).begin());
    }
    auto negs = select_hard_negatives(pe, le, pool, pos, radius, kUncapped);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      out[batch[r]] = std::move(negs[r]);
    }
  }
  return out;
}

double bad_event_rate(const Dataset& data, const Matrix& point_emb,
                      const Matrix& label_emb, const HardNegatives& retrieved,
                      double radius) {
  require_shapes(data, point_emb, label_emb);
  if (retrieved.size() != data.num_points()) {
    throw ConfigError("retrieved negatives must cover every point");
  }
  const std::size_t n = data.num_points(), num_labels = data.num_labels();
  std::vector<std::uint64_t> per_point(n, 0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<LabelId> got = retrieved[i];
    std::sort(got.begin(), got.end());
    std::uint64_t cnt = 0;
    for (LabelId l = 0; l < num_labels; ++l) {
      if (data.is_positive(static_cast<PointId>(i), l)) continue;
      if (unit_distance(point_emb.row(i), label_emb.row(l)) > radius) continue;
      if (!std::binary_search(got.begin(), got.end(), l)) ++cnt;
    }
    per_point[i] = cnt;
  });
  std::uint64_t total = 0;
  for (auto c : per_point) total += c;
  return static_cast<double>(total) /
         (static_cast<double>(n) * static_cast<double>(num_labels));
}

GoodnessReport verify_bound(const Dataset& data, const Matrix& point_emb,
                            const Matrix& label_emb,
                            const Clustering& clustering, double radius) {
  const DatasetStats stats = compute_stats(data);
  const BoundConstants c = bound_constants(stats);
  GoodnessReport r;
  r.radius = radius;
  r.num_clusters = clustering.num_clusters();
  r.epsilon1 = embedding_goodness(data, point_emb, label_emb, radius);
  r.epsilon2 = clustering_goodness(point_emb, clustering, 2.0 * radius,
                                   GoodnessMode::Exact());
  const auto retrieved =
      full_coverage_negatives(data, point_emb, label_emb, clustering, radius);
  r.bad_event_rate =
      bad_event_rate(data, point_emb, label_emb, retrieved, radius);
  r.c1 = c.c1;
  r.c2 = c.c2;
  r.bound_rhs = c.c1 * r.epsilon1 + c.c2 * r.epsilon2;
  r.holds = leq_with_slack(r.bad_event_rate, r.bound_rhs);

  const auto [pmin, pmax] = std::minmax_element(stats.p.begin(), stats.p.end());
  const auto [qmin, qmax] = std::minmax_element(stats.q.begin(), stats.q.end());
  r.balanced = !stats.p.empty() && !stats.q.empty() && *pmin == *pmax &&
               *qmin == *qmax;
  r.corollary_rhs = r.epsilon1 + r.epsilon2;
  r.corollary_holds = r.balanced && leq_with_slack(r.c1, 1.0) &&
                      leq_with_slack(r.c2, 1.0) &&
                      leq_with_slack(r.bad_event_rate, r.corollary_rhs);
  return r;
}

GoodnessReport verify_bound(const Dataset& data, const Encoder& encoder,
                            const MinerConfig& miner, double radius,
                            std::uint64_t seed) {
  // Unit vectors are at most 2 apart, so larger radii carry no information.
  if (!(radius >= 0.0 && radius <= 2.0)) {
    throw ConfigError("radius must be in [0, 2]");
  }
  if (miner.cluster_size == 0) throw ConfigError("cluster size must be >= 1");
  const Matrix pe = encoder.embed_batch(data.point_features());
  const Matrix le = encoder.embed_batch(data.label_features());
  const Clustering clustering = balanced_cluster(pe, miner.cluster_size, seed);
  return verify_bound(data, pe, le, clustering, radius);
}

std::string format_goodness(const GoodnessReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "radius = " << r.radius << '\n'
     << "num_clusters = " << r.num_clusters << '\n'
     << "epsilon1 = " << r.epsilon1 << '\n'
     << "epsilon2 = " << r.epsilon2 << '\n'
     << "bad_event_rate = " << r.bad_event_rate << '\n'
     << "c1 = " << r.c1 << '\n'
     << "c2 = " << r.c2 << '\n'
     << "bound_rhs = " << r.bound_rhs << '\n'
     << "holds = " << (r.holds ? "true" : "false") << '\n'
     << "balanced = " << (r.balanced ? "true" : "false") << '\n';
  if (r.balanced) {
    os << "corollary_rhs = " << r.corollary_rhs << '\n'
       << "corollary_holds = " << (r.corollary_holds ? "true" : "false")
       << '\n';
  }
  return os.str();
}

}  // namespace xcm
