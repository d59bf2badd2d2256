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

// Sparse extreme-classification datasets in the repository text format:
//
//   num_rows num_features num_labels
//   l1,l2,... f1:v1 f2:v2 ...
//
// One row per data point. The label list may be empty, in which case the row
// starts with a space.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "xcmine/common.h"

namespace xcm {

struct SparseEntry {
  std::uint32_t feature = 0;
  double value = 0.0;
  bool operator==(const SparseEntry&) const = default;
};

// Feature ids strictly increasing and < dimensionality; values finite.
class SparseVector {
 public:
  SparseVector() = default;
  // Sorts entries by id. Throws FormatError on duplicate ids, RangeError on
  // ids >= dimensionality and ValueError on non-finite values.
  SparseVector(std::vector<SparseEntry> entries, std::size_t dimensionality);

  const std::vector<SparseEntry>& entries() const { return entries_; }
  std::size_t dimensionality() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<SparseEntry> entries_;
  std::size_t dim_ = 0;
};

// Rows of a parsed sparse file.
struct SparseFile {
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
  std::vector<SparseVector> rows;
  std::vector<std::vector<LabelId>> labels;
};

SparseFile parse_sparse(std::istream& in);
SparseFile parse_sparse_file(const std::string& path);
void write_sparse(std::ostream& out, const SparseFile& file);
void write_sparse_file(const std::string& path, const SparseFile& file);

// Immutable training/test set. Relevance is stored twice: point -> sorted
// label ids and label -> sorted point ids.
class Dataset {
 public:
  std::size_t num_points() const { return points_.size(); }
  std::size_t num_labels() const { return label_features_.size(); }
  std::size_t num_features() const { return num_features_; }

  const std::vector<SparseVector>& point_features() const { return points_; }
  const std::vector<SparseVector>& label_features() const {
    return label_features_;
  }
  const SparseVector& point(PointId i) const { return points_[i]; }
  const SparseVector& label(LabelId l) const { return label_features_[l]; }

  const std::vector<std::vector<LabelId>>& point_labels() const {
    return point_labels_;
  }
  const std::vector<std::vector<PointId>>& label_points() const {
    return label_points_;
  }
  const std::vector<LabelId>& positives(PointId i) const {
    return point_labels_[i];
  }
  bool is_positive(PointId i, LabelId l) const;

  // Points with at least one positive label, ascending.
  std::vector<PointId> eligible_points() const;

  // Training-set frequency f_l of every label.
  std::vector<std::size_t> label_frequencies() const;

  bool operator==(const Dataset&) const = default;

 private:
  friend Dataset build_dataset(std::vector<SparseVector>,
                               std::vector<SparseVector>,
                               std::vector<std::vector<LabelId>>);
  std::size_t num_features_ = 0;
  std::vector<SparseVector> points_;
  std::vector<SparseVector> label_features_;
  std::vector<std::vector<LabelId>> point_labels_;
  std::vector<std::vector<PointId>> label_points_;
};

// Materializes the transpose and validates ids. Label lists are sorted and
// de-duplicated. Point and label features must share one vocabulary.
Dataset build_dataset(std::vector<SparseVector> points,
                      std::vector<SparseVector> labels,
                      std::vector<std::vector<LabelId>> relevance);

// Loads a point file and a label-feature file.
Dataset load_dataset(const std::string& point_path,
                     const std::string& label_feature_path);

// Inverse of load_dataset for the point file / label-feature file pair.
SparseFile point_file(const Dataset& d);
SparseFile label_feature_file(const Dataset& d);

// Counts and moments that parameterize the negative-mining bound.
struct DatasetStats {
  std::size_t num_points = 0;
  std::size_t num_labels = 0;
  std::vector<std::size_t> p;  // positives per point
  std::vector<std::size_t> q;  // positives per label
  std::size_t total_positives = 0;
  double p_bar = 0.0;
  double q_bar = 0.0;
  std::size_t p_min = 0;
  std::size_t q_min = 0;
  // Population moments of (N - q_l) / q_l and p_i. mu1 / sigma1_sq are NaN
  // when q_min == 0.
  double mu1 = 0.0;
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;
  // False when q_min == 0; the bound constants are undefined then.
  bool bound_usable = false;
};

DatasetStats compute_stats(const Dataset& d);

// Key-value report used by the stats subcommand.
std::string format_stats(const DatasetStats& s);

}  // namespace xcm
