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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xcmine/ann.h"
#include "xcmine/dataset.h"
#include "xcmine/encoder.h"
#include "xcmine/fusion.h"
#include "xcmine/trainer.h"

namespace xcm {

// max(2k, 100), clamped to L.
std::size_t default_shortlist_size(std::size_t k, std::size_t num_labels);

// Shortlists labels by MIPS over the classifiers and ranks them by
//   T(d) + E(z_l).E(x) + w_l.E(x)
// or by w_l.E(x) alone when no fusion tree is installed.
class Predictor {
 public:
  // label_emb and classifiers are L x D, rows unit-norm. label_freq has L
  // entries. Without index options the mode is picked from L.
  Predictor(const Encoder& encoder, Matrix label_emb, ClassifierBank bank,
            std::vector<std::size_t> label_freq,
            std::optional<IndexOptions> index_options = std::nullopt);

  void set_fusion(FusionModel model) { fusion_ = std::move(model); }
  void clear_fusion() { fusion_.reset(); }
  const std::optional<FusionModel>& fusion() const { return fusion_; }

  // 0 = default_shortlist_size(k, L).
  void set_shortlist_size(std::size_t n) { shortlist_size_ = n; }
  std::size_t shortlist_size(std::size_t k) const;

  std::size_t num_labels() const { return label_emb_.rows(); }
  const MipsIndex& index() const { return index_; }
  const Encoder& encoder() const { return encoder_; }

  Descriptor describe(std::span<const double> e, LabelId l) const;
  double fused_score(std::span<const double> e, LabelId l) const;

  // Labels in the classifier shortlist of an embedding, best first.
  std::vector<ScoredId> shortlist(std::span<const double> e,
                                  std::size_t n) const;

  // Top-k (label, score), descending score with ascending id on ties.
  // Propagates DegenerateInput from the encoder.
  std::vector<ScoredId> predict(const SparseVector& x, std::size_t k) const;
  std::vector<ScoredId> predict_embedding(std::span<const double> e,
                                          std::size_t k) const;

 private:
  const Encoder& encoder_;
  Matrix label_emb_;
  Matrix classifiers_;
  std::vector<std::size_t> label_freq_;
  MipsIndex index_;
  std::optional<FusionModel> fusion_;
  std::size_t shortlist_size_ = 0;
};

// Descriptor/target pairs over l in shortlist(i) U positives(i) for every
// validation point i. Throws ConfigError when `validation` is empty.
std::vector<FusionPair> build_fusion_training_set(
    const Dataset& data, std::span<const PointId> validation,
    const Predictor& predictor, std::size_t shortlist_size);

// TSV: "point_id<TAB>label:score,label:score,...".
void write_predictions(const std::string& path,
                       const std::vector<std::vector<ScoredId>>& preds);
std::vector<std::vector<LabelId>> read_predictions(const std::string& path,
                                                   std::size_t num_points);

}  // namespace xcm
