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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "xcmine/common.h"

namespace xcm {

// (E(z_l).E(x), w_l.E(x), f_l)
struct Descriptor {
  double siamese_score = 0.0;
  double classifier_score = 0.0;
  double label_frequency = 0.0;

  static constexpr std::size_t kNumFeatures = 3;
  double feature(std::size_t f) const {
    return f == 0 ? siamese_score : f == 1 ? classifier_score : label_frequency;
  }
};

struct FusionPair {
  Descriptor d;
  double target = 0.0;  // 1 if the label is relevant
};

// Binary regression tree with axis-aligned splits "feature <= threshold".
// Nodes are stored in preorder; a node with feature < 0 is a leaf.
class FusionModel {
 public:
  struct Node {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double value = 0.0;  // leaf prediction (mean target); unused internally
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  FusionModel() = default;
  explicit FusionModel(std::vector<Node> nodes);

  double predict(const Descriptor& d) const;
  std::size_t depth() const;
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_leaves() const;
  const std::vector<Node>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

 private:
  std::vector<Node> nodes_;
};

struct TreeOptions {
  std::size_t max_depth = 7;
  std::size_t min_leaf = 16;
};

// Greedy CART with squared-error (variance reduction) splits. Stops at
// max_depth, at a pure node, or when no split leaves min_leaf pairs on both
// sides. Throws ConfigError on an empty training set.
FusionModel fit_tree(const std::vector<FusionPair>& pairs,
                     const TreeOptions& options = {});

// Sum of squared errors of the model on `pairs`.
double squared_error(const FusionModel& m, const std::vector<FusionPair>& pairs);

// Versioned preorder record: magic "XCMFUS01", u32 version, u32 node count,
// then per node i32 feature, f64 threshold, f64 value.
void save_fusion(const std::string& path, const FusionModel& m);
FusionModel load_fusion(const std::string& path);

}  // namespace xcm
