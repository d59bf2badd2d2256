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


#include "xcmine/synth.h"

#include <cmath>
#include <map>
#include <numbers>

namespace xcm {
namespace {

SparseVector from_counts(const std::map<std::uint32_t, double>& counts,
                         std::size_t dim) {
  std::vector<SparseEntry> e;
  e.reserve(counts.size());
  for (const auto& [f, v] : counts) e.push_back({f, v});
  return SparseVector(std::move(e), dim);
}

}  // namespace

void SynthSpec::validate() const {
  if (num_clusters < 1 || points_per_cluster < 1 || labels_per_cluster < 1 ||
      dim < 2 || cluster_tokens < 1 || label_tokens < 1 ||
      tokens_per_point < 1 || positives_per_point < 1) {
    throw ConfigError("synth counts must be >= 1 (dim >= 2)");
  }
  if (!(overlap >= 0.0 && overlap <= 1.0) || !(noise >= 0.0 && noise <= 1.0)) {
    throw ConfigError("synth overlap and noise must lie in [0, 1]");
  }
  if (positives_per_point > labels_per_cluster) {
    throw ConfigError("positives_per_point exceeds labels_per_cluster");
  }
  if (vocab() < planted_vocab()) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) +
                      " cannot hold " + std::to_string(planted_vocab()) +
                      " planted tokens");
  }
}

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x5e7));
  const std::size_t vocab = spec.vocab();
  const std::size_t block = spec.block_size();
  const std::size_t lc = spec.labels_per_cluster;
  const std::size_t num_labels = spec.num_clusters * lc;

  auto cluster_token = [&](std::size_t k) -> std::uint32_t {
    if (uniform_real(rng) < spec.overlap) {
      return static_cast<std::uint32_t>(
          k * block + uniform_index(rng, spec.cluster_tokens));
    }
    return static_cast<std::uint32_t>(uniform_index(rng, vocab));
  };
  auto label_token = [&](std::size_t k, std::size_t local,
                         std::size_t t) -> std::uint32_t {
    return static_cast<std::uint32_t>(k * block + spec.cluster_tokens +
                                      local * spec.label_tokens + t);
  };

  SynthData out;
  std::vector<SparseVector> labels;
  labels.reserve(num_labels);
  for (std::size_t k = 0; k < spec.num_clusters; ++k) {
    for (std::size_t local = 0; local < lc; ++local) {
      std::map<std::uint32_t, double> counts;
      for (std::size_t t = 0; t < 2; ++t) counts[cluster_token(k)] += 1.0;
      for (std::size_t t = 0; t < spec.label_tokens; ++t) {
        counts[label_token(k, local, t)] += 1.0;
      }
      labels.push_back(from_counts(counts, vocab));
      out.label_cluster.push_back(static_cast<std::uint32_t>(k));
    }
  }

  std::vector<SparseVector> points;
  std::vector<std::vector<LabelId>> relevance;
  for (std::size_t k = 0; k < spec.num_clusters; ++k) {
    for (std::size_t j = 0; j < spec.points_per_cluster; ++j) {
      std::vector<std::size_t> own = {j % lc};
      while (own.size() < spec.positives_per_point) {
        const std::size_t extra = uniform_index(rng, lc);
        if (std::find(own.begin(), own.end(), extra) == own.end()) {
          own.push_back(extra);
        }
      }
      std::map<std::uint32_t, double> counts;
      for (std::size_t t = 0; t < spec.tokens_per_point; ++t) {
        counts[cluster_token(k)] += 1.0;
      }
      for (std::size_t local : own) {
        counts[label_token(k, local, uniform_index(rng, spec.label_tokens))] +=
            1.0;
      }
      std::vector<LabelId> rel;
      for (std::size_t local : own) {
        LabelId l = static_cast<LabelId>(k * lc + local);
        if (uniform_real(rng) < spec.noise) {
          l = static_cast<LabelId>(uniform_index(rng, num_labels));
        }
        rel.push_back(l);
      }
      points.push_back(from_counts(counts, vocab));
      relevance.push_back(std::move(rel));
      out.point_cluster.push_back(static_cast<std::uint32_t>(k));
    }
  }
  out.dataset =
      build_dataset(std::move(points), std::move(labels), std::move(relevance));
  return out;
}

EncoderParams shared_token_init(const SynthSpec& spec, std::uint64_t seed,
                                double perturbation) {
  spec.validate();
  EncoderParams p = init_params(spec.vocab(), spec.dim, seed);
  Rng rng(derive_seed(seed, 0x5a7ed));
  const std::size_t block = spec.block_size();
  // Box-Muller over the portable uniform draw; the standard normal
  // distribution is not specified bit-for-bit across libraries.
  auto gauss = [](Rng& r) {
    const double u1 = 1.0 - uniform_real(r);  // (0, 1]
    const double u2 = uniform_real(r);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };
  for (std::size_t k = 0; k < spec.num_clusters; ++k) {
    std::vector<double> u(spec.dim);
    for (double& x : u) x = gauss(rng);
    normalize(u);
    for (std::size_t t = k * block; t < (k + 1) * block; ++t) {
      auto row = p.table.row(t);
      for (std::size_t c = 0; c < spec.dim; ++c) {
        row[c] = u[c] + perturbation * gauss(rng);
      }
    }
  }
  return p;
}

}  // namespace xcm
