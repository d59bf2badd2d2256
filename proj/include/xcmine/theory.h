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

#include "xcmine/clustering.h"
#include "xcmine/dataset.h"
#include "xcmine/encoder.h"
#include "xcmine/negmine.h"

namespace xcm {

// Fraction of (point, positive label) pairs whose embeddings lie farther
// apart than `radius`. Every positive pair counts once. Throws
// DegenerateInput when the dataset has no positive pair.
double embedding_goodness(const Dataset& data, const Matrix& point_emb,
                          const Matrix& label_emb, double radius);

struct BoundConstants {
  double c1 = 0.0;
  double c2 = 0.0;
};

// c1 = q_bar (mu1 + sigma1 sqrt(L)) / N
// c2 = (p_bar + sigma2 sqrt(N)) N / (q_min L)
// Throws DegenerateInput when some label has no positive point.
BoundConstants bound_constants(const DatasetStats& stats);

// Retrieval pass in which every cluster forms one batch and the number of
// negatives is uncapped, so any in-pool label within `radius` is retrieved.
HardNegatives full_coverage_negatives(const Dataset& data,
                                      const Matrix& point_emb,
                                      const Matrix& label_emb,
                                      const Clustering& clustering,
                                      double radius);

// (1/NL) |{(i,l) : l irrelevant to i, ||E(x_i) - E(z_l)|| <= radius and
// l not retrieved for i}|.
double bad_event_rate(const Dataset& data, const Matrix& point_emb,
                      const Matrix& label_emb, const HardNegatives& retrieved,
                      double radius);

struct GoodnessReport {
  double radius = 0.0;
  std::size_t num_clusters = 0;
  double epsilon1 = 0.0;  // embedding goodness at radius
  double epsilon2 = 0.0;  // clustering goodness at 2 * radius
  double bad_event_rate = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double bound_rhs = 0.0;  // c1 * epsilon1 + c2 * epsilon2
  bool holds = false;      // bad_event_rate <= bound_rhs, 1e-12 relative slack
  // Balanced-corollary view: c1 <= 1, c2 <= 1, and the rate stays below
  // epsilon1 + epsilon2.
  bool balanced = false;  // every p_i equal and every q_l equal
  double corollary_rhs = 0.0;
  bool corollary_holds = false;
};

// Full check on fixed embeddings and a fixed clustering.
GoodnessReport verify_bound(const Dataset& data, const Matrix& point_emb,
                            const Matrix& label_emb,
                            const Clustering& clustering, double radius);

// Embeds the dataset, clusters points with balanced_cluster at the miner's
// cluster size, and runs the check above. Throws ConfigError unless the
// radius lies in [0, 2].
GoodnessReport verify_bound(const Dataset& data, const Encoder& encoder,
                            const MinerConfig& miner, double radius,
                            std::uint64_t seed);

std::string format_goodness(const GoodnessReport& r);

}  // namespace xcm
