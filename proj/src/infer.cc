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

#include "xcmine/infer.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace xcm {

namespace {

// Shape checks run before the index is built over the classifiers.
Matrix checked_weights(const Matrix& label_emb, ClassifierBank& bank,
                       std::size_t num_freq) {
  if (label_emb.rows() != bank.weights.rows() ||
      label_emb.cols() != bank.weights.cols()) {
    throw ConfigError("label embeddings and classifiers differ in shape");
  }
  if (num_freq != label_emb.rows()) {
    throw ConfigError("label frequency table must cover every label");
  }
  return std::move(bank.weights);
}

}  // namespace

std::size_t default_shortlist_size(std::size_t k, std::size_t num_labels) {
  return std::min(num_labels, std::max<std::size_t>(2 * k, 100));
}

Predictor::Predictor(const Encoder& encoder, Matrix label_emb,
                     ClassifierBank bank, std::vector<std::size_t> label_freq,
                     std::optional<IndexOptions> index_options)
    : encoder_(encoder),
      label_emb_(std::move(label_emb)),
      classifiers_(bank.weights),
      label_freq_(std::move(label_freq)),
      index_(checked_weights(label_emb_, bank, label_freq_.size()),
             index_options.value_or(IndexOptions::Auto(classifiers_.rows()))) {}

std::size_t Predictor::shortlist_size(std::size_t k) const {
  const std::size_t s = shortlist_size_ == 0
                            ? default_shortlist_size(k, num_labels())
                            : std::min(shortlist_size_, num_labels());
  return std::min(num_labels(), std::max(k, s));
}

Descriptor Predictor::describe(std::span<const double> e, LabelId l) const {
  return {dot(label_emb_.row(l), e), dot(classifiers_.row(l), e),
          static_cast<double>(label_freq_[l])};
}

double Predictor::fused_score(std::span<const double> e, LabelId l) const {
  const Descriptor d = describe(e, l);
  if (!fusion_) return d.classifier_score;
  return fusion_->predict(d) + d.siamese_score + d.classifier_score;
}

std::vector<ScoredId> Predictor::shortlist(std::span<const double> e,
                                           std::size_t n) const {
  return index_.query(e, n);
}

std::vector<ScoredId> Predictor::predict_embedding(std::span<const double> e,
                                                   std::size_t k) const {
  if (k == 0) throw ConfigError("k must be >= 1");
  auto cands = shortlist(e, shortlist_size(k));
  for (auto& c : cands) c.score = fused_score(e, c.id);
  std::sort(cands.begin(), cands.end(), ranks_before);
  if (cands.size() > k) cands.resize(k);
  return cands;
}

std::vector<ScoredId> Predictor::predict(const SparseVector& x,
                                         std::size_t k) const {
  const Embedding e = encoder_.embed(x);
  return predict_embedding(e, k);
}

std::vector<FusionPair> build_fusion_training_set(
    const Dataset& data, std::span<const PointId> validation,
    const Predictor& predictor, std::size_t shortlist_size) {
  if (validation.empty()) {
    throw ConfigError("fusion training needs a non-empty validation set");
  }
  std::vector<FusionPair> pairs;
  for (PointId i : validation) {
    const Embedding e = predictor.encoder().embed(data.point(i));
    std::vector<LabelId> labels;
    for (const auto& s : predictor.shortlist(e, shortlist_size)) {
      labels.push_back(s.id);
    }
    const auto& pos = data.positives(i);
    labels.insert(labels.end(), pos.begin(), pos.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    for (LabelId l : labels) {
      pairs.push_back({predictor.describe(e, l),
                       data.is_positive(i, l) ? 1.0 : 0.0});
    }
  }
  return pairs;
}

void write_predictions(const std::string& path,
                       const std::vector<std::vector<ScoredId>>& preds) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out.precision(9);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i << '\t';
    for (std::size_t j = 0; j < preds[i].size(); ++j) {
      if (j > 0) out << ',';
      out << preds[i][j].id << ':' << preds[i][j].score;
    }
    out << '\n';
  }
}

std::vector<std::vector<LabelId>> read_predictions(const std::string& path,
                                                   std::size_t num_points) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::vector<LabelId>> out(num_points);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": expected point_id<TAB>labels");
    }
    std::size_t point = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + tab, point);
    if (ec != std::errc() || p != line.data() + tab) {
      throw FormatError(path + ":" + std::to_string(line_no) +
                        ": bad point id");
    }
    if (point >= num_points) {
      throw RangeError(path + ":" + std::to_string(line_no) + ": point " +
                       std::to_string(point) + " >= " +
                       std::to_string(num_points));
    }
    std::stringstream items(line.substr(tab + 1));
    std::string item;
    while (std::getline(items, item, ',')) {
      if (item.empty()) continue;
      const auto colon = item.find(':');
      LabelId l = 0;
      auto [q, ec2] = std::from_chars(
          item.data(), item.data() + (colon == std::string::npos
                                          ? item.size()
                                          : colon),
          l);
      if (ec2 != std::errc()) {
        throw FormatError(path + ":" + std::to_string(line_no) +
                          ": bad label '" + item + "'");
      }
      out[point].push_back(l);
    }
  }
  return out;
}

}  // namespace xcm
