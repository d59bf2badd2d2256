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

// Two-stage training.
//
// Stage one (M1) trains the shared encoder with a triplet loss in which the
// label embedding E(z_l) doubles as the classifier. Stage two (M2) freezes
// the encoder and refines a free, unit-norm classifier w_l per label,
// initialised at E(z_l). Both stages draw negatives from the configured
// miner and update with Adam.

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xcmine/common.h"
#include "xcmine/dataset.h"
#include "xcmine/encoder.h"
#include "xcmine/negmine.h"

namespace xcm {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

// Bias-corrected Adam. Lazily sizes the state on first use. Throws
// NumericsError on a non-finite gradient (parameters are left untouched).
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamHyper& hyper);

struct TrainConfig {
  MinerConfig miner;
  double gamma = 0.3;
  std::size_t m1_epochs = 300;
  double m1_learning_rate = 1e-4;
  std::size_t m2_epochs = 50;
  double m2_learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  LossKind loss = LossKind::kHinge;
  std::uint64_t seed = 0;
  // Points used for the per-epoch P@1 estimate (0 = all eligible points).
  std::size_t eval_sample = 0;
  // Skip the per-epoch P@1 estimate entirely.
  bool eval_each_epoch = true;
  // Stop M1 early once the per-epoch P@1 reaches this value (<= 0: never).
  double stop_at_p1 = 0.0;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;          // mean per eligible point
  double p_at_1 = 0.0;        // on the evaluation sample
  double seconds = 0.0;       // training wall-clock, sampling excluded
  double sampling_seconds = 0.0;
  std::size_t cluster_size = 0;
  std::size_t negatives = 0;  // triplet terms used this epoch
};

struct M1Result {
  std::vector<EpochLog> log;
};

// Trains `encoder` in place. Clusters are refreshed every tau epochs (and
// whenever the curriculum changes C); one positive is sampled per point per
// batch; batches with no hard negatives contribute nothing.
M1Result train_m1(const Dataset& data, Encoder& encoder,
                  const TrainConfig& config);

// Unit-norm per-label classifiers. Residuals are w_l - E(z_l).
struct ClassifierBank {
  Matrix weights;  // L x D
};

struct M2Result {
  ClassifierBank bank;
  std::vector<EpochLog> log;
};

M2Result train_m2(const Dataset& data, const Encoder& encoder,
                  const TrainConfig& config);

// Variant taking precomputed embeddings of every point and label.
M2Result train_m2(const Dataset& data, const Matrix& point_emb,
                  const Matrix& label_emb, const TrainConfig& config);

// Embedding-only P@1 over `points`: top label by <E(x), E(z_l)>.
double embedding_p_at_1(const Dataset& data, const Encoder& encoder,
                        std::span<const PointId> points);

// P@1 of rows of `point_emb` (aligned with `points`) against `label_vectors`.
double p_at_1(const Dataset& data, const Matrix& point_emb,
              std::span<const PointId> points, const Matrix& label_vectors);

// Classifier bank checkpoint: magic "XCMCLS01", u32 version, u64 L, u64 D,
// then row-major little-endian f32.
void save_classifiers(const std::string& path, const ClassifierBank& bank);
ClassifierBank load_classifiers(const std::string& path);

// Training log CSV: epoch,loss,p_at_1,seconds.
void write_train_log(const std::string& path,
                     const std::vector<EpochLog>& log);

}  // namespace xcm
