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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xcmine/common.h"
#include "xcmine/dataset.h"

namespace xcm {

// A unit-norm point on the D-dimensional sphere.
using Embedding = std::vector<double>;

enum class LossKind { kHinge, kSquaredHinge };

LossKind parse_loss_kind(const std::string& s);
std::string to_string(LossKind k);

// Per-term triplet loss given s+ = <anchor, positive> and s- = <anchor,
// negative>: [s- - s+ + gamma]_+ (or its square).
double triplet_term(double s_pos, double s_neg, double gamma, LossKind kind);

// Derivative of triplet_term with respect to (s- - s+ + gamma).
double triplet_term_slope(double s_pos, double s_neg, double gamma,
                          LossKind kind);

// A set of distinct inputs and the (anchor, positive, negatives) terms that
// reference them by index. Every term contributes
//   sum_k loss(<e_a, e_p>, <e_a, e_k>)
// to the batch loss.
struct TripletBatch {
  struct Term {
    std::size_t anchor = 0;
    std::size_t positive = 0;
    std::vector<std::size_t> negatives;
  };
  std::vector<const SparseVector*> inputs;
  std::vector<Term> terms;
};

struct LossAndGrad {
  double loss = 0.0;
  // Flat gradient with the same layout as Encoder::parameters().
  std::vector<double> grad;
};

// Maps sparse inputs onto the unit sphere. Implementations must be pure given
// their parameters so embeddings can be computed concurrently.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t dim() const = 0;

  // Throws DegenerateInput for an empty input or a zero pre-normalization
  // sum.
  virtual Embedding embed(const SparseVector& x) const = 0;

  // Row r of the result is embed(xs[r]). DegenerateInput messages carry the
  // offending index.
  virtual Matrix embed_batch(std::span<const SparseVector> xs) const;
  virtual Matrix embed_rows(const std::vector<SparseVector>& pool,
                            std::span<const std::uint32_t> ids) const;

  virtual LossAndGrad loss_and_grad(const TripletBatch& batch, double gamma,
                                    LossKind kind) const = 0;

  virtual std::span<double> parameters() = 0;
  virtual std::span<const double> parameters() const = 0;

  virtual std::unique_ptr<Encoder> clone() const = 0;
};

// V x D token-embedding table.
struct EncoderParams {
  Matrix table;
  std::size_t vocab() const { return table.rows(); }
  std::size_t dim() const { return table.cols(); }
};

// Entries i.i.d. uniform in [-1/sqrt(D), 1/sqrt(D)].
EncoderParams init_params(std::size_t vocab, std::size_t dim,
                          std::uint64_t seed);

// E(x) = normalize(sum_t x_t * table[t]).
class BagOfEmbeddings final : public Encoder {
 public:
  explicit BagOfEmbeddings(EncoderParams params);

  std::size_t dim() const override { return params_.dim(); }
  Embedding embed(const SparseVector& x) const override;
  LossAndGrad loss_and_grad(const TripletBatch& batch, double gamma,
                            LossKind kind) const override;
  std::span<double> parameters() override { return params_.table.data(); }
  std::span<const double> parameters() const override {
    return params_.table.data();
  }
  std::unique_ptr<Encoder> clone() const override {
    return std::make_unique<BagOfEmbeddings>(*this);
  }

  const EncoderParams& params() const { return params_; }

 private:
  EncoderParams params_;
};

// Checkpoint: magic "XCMENC01", u32 version, u64 V, u64 D, then V*D
// little-endian f32 values in row-major order.
void save_encoder(const std::string& path, const EncoderParams& params);
EncoderParams load_encoder(const std::string& path);

}  // namespace xcm
