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
#include <vector>

#include "xcmine/dataset.h"
#include "xcmine/encoder.h"

namespace xcm {

// Planted-cluster task. Cluster k owns a token block made of
// `cluster_tokens` shared tokens followed by `label_tokens` tokens for each
// of its labels. Point j of cluster k has primary label j mod
// labels_per_cluster.
struct SynthSpec {
  std::size_t num_clusters = 8;
  std::size_t points_per_cluster = 50;
  std::size_t labels_per_cluster = 10;
  std::size_t vocab_size = 0;  // 0 = exactly the planted blocks
  std::size_t dim = 16;
  // Probability that a sampled token stays inside the cluster's own block;
  // otherwise it is drawn uniformly from the whole vocabulary.
  double overlap = 1.0;
  // Probability that a positive is replaced by a uniformly random label.
  double noise = 0.0;
  std::uint64_t seed = 0;

  std::size_t cluster_tokens = 8;
  std::size_t label_tokens = 2;
  std::size_t tokens_per_point = 6;  // cluster tokens drawn per point
  std::size_t positives_per_point = 1;

  std::size_t block_size() const {
    return cluster_tokens + labels_per_cluster * label_tokens;
  }
  std::size_t planted_vocab() const { return num_clusters * block_size(); }
  std::size_t vocab() const {
    return vocab_size == 0 ? planted_vocab() : vocab_size;
  }

  // Throws ConfigError unless all counts are >= 1, rates lie in [0, 1],
  // positives_per_point <= labels_per_cluster and the vocabulary holds every
  // block.
  void validate() const;
};

struct SynthData {
  Dataset dataset;
  std::vector<std::uint32_t> point_cluster;
  std::vector<std::uint32_t> label_cluster;
};

SynthData generate(const SynthSpec& spec);

// Encoder table in which every token of cluster block k points along a
// common random direction u_k, plus a small seeded perturbation. Tokens
// outside the blocks are drawn as in init_params.
EncoderParams shared_token_init(const SynthSpec& spec, std::uint64_t seed,
                                double perturbation = 0.05);

}  // namespace xcm
