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

#include "xcmine/encoder.h"

#include <fstream>

#include "xcmine/binio.h"

namespace xcm {
namespace {

constexpr std::string_view kEncoderMagic = "XCMENC01";
constexpr std::uint32_t kEncoderVersion = 1;
constexpr double kMinNorm = 1e-12;

// Pre-normalization sum u = sum_t x_t * table[t].
void accumulate(const Matrix& table, const SparseVector& x,
                std::span<double> u) {
  std::fill(u.begin(), u.end(), 0.0);
  for (const auto& e : x.entries()) {
    if (e.feature >= table.rows()) {
      throw RangeError("feature id " + std::to_string(e.feature) +
                       " outside encoder vocabulary of " +
                       std::to_string(table.rows()));
    }
    auto row = table.row(e.feature);
    for (std::size_t c = 0; c < u.size(); ++c) u[c] += e.value * row[c];
  }
}

}  // namespace

LossKind parse_loss_kind(const std::string& s) {
  if (s == "hinge") return LossKind::kHinge;
  if (s == "squared-hinge" || s == "squared_hinge") {
    return LossKind::kSquaredHinge;
  }
  throw ConfigError("unknown loss kind '" + s + "'");
}

std::string to_string(LossKind k) {
  return k == LossKind::kHinge ? "hinge" : "squared-hinge";
}

double triplet_term(double s_pos, double s_neg, double gamma, LossKind kind) {
  const double z = std::max(0.0, s_neg - s_pos + gamma);
  return kind == LossKind::kHinge ? z : z * z;
}

double triplet_term_slope(double s_pos, double s_neg, double gamma,
                          LossKind kind) {
  const double z = s_neg - s_pos + gamma;
  if (z <= 0.0) return 0.0;
  return kind == LossKind::kHinge ? 1.0 : 2.0 * z;
}

Matrix Encoder::embed_batch(std::span<const SparseVector> xs) const {
  Matrix out(xs.size(), dim());
  std::vector<std::string> errors(xs.size());
  parallel_for(xs.size(), [&](std::size_t r) {
    try {
      const Embedding e = embed(xs[r]);
      std::copy(e.begin(), e.end(), out.row(r).begin());
    } catch (const DegenerateInput& ex) {
      errors[r] = ex.what();
    }
  });
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r].empty()) {
      throw DegenerateInput("input " + std::to_string(r) + ": " + errors[r]);
    }
  }
  return out;
}

Matrix Encoder::embed_rows(const std::vector<SparseVector>& pool,
                           std::span<const std::uint32_t> ids) const {
  Matrix out(ids.size(), dim());
  std::vector<std::string> errors(ids.size());
  parallel_for(ids.size(), [&](std::size_t r) {
    try {
      const Embedding e = embed(pool[ids[r]]);
      std::copy(e.begin(), e.end(), out.row(r).begin());
    } catch (const DegenerateInput& ex) {
      errors[r] = ex.what();
    }
  });
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r].empty()) {
      throw DegenerateInput("input " + std::to_string(ids[r]) + ": " +
                            errors[r]);
    }
  }
  return out;
}

EncoderParams init_params(std::size_t vocab, std::size_t dim,
                          std::uint64_t seed) {
  if (dim < 2) throw ConfigError("embedding dimension must be >= 2");
  if (vocab < 1) throw ConfigError("vocabulary must be non-empty");
  EncoderParams p{Matrix(vocab, dim)};
  Rng rng(seed);
  const double a = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& v : p.table.data()) v = (2.0 * uniform_real(rng) - 1.0) * a;
  return p;
}

BagOfEmbeddings::BagOfEmbeddings(EncoderParams params)
    : params_(std::move(params)) {
  if (params_.dim() < 2) throw ConfigError("embedding dimension must be >= 2");
  for (double v : params_.table.data()) {
    if (!std::isfinite(v)) throw NumericsError("non-finite encoder parameter");
  }
}

Embedding BagOfEmbeddings::embed(const SparseVector& x) const {
  if (x.empty()) throw DegenerateInput("empty sparse input");
  Embedding u(dim());
  accumulate(params_.table, x, u);
  if (normalize(u) <= kMinNorm) {
    throw DegenerateInput("pre-normalization sum has zero norm");
  }
  return u;
}

LossAndGrad BagOfEmbeddings::loss_and_grad(const TripletBatch& batch,
                                           double gamma,
                                           LossKind kind) const {
  if (gamma < 0.0) throw ConfigError("margin gamma must be >= 0");
  const std::size_t D = dim();
  const std::size_t n = batch.inputs.size();

  // Forward: unnormalized sums, norms and unit embeddings.
  Matrix emb(n, D);
  std::vector<double> norms(n);
  for (std::size_t r = 0; r < n; ++r) {
    const SparseVector& x = *batch.inputs[r];
    if (x.empty()) {
      throw DegenerateInput("input " + std::to_string(r) +
                            ": empty sparse input");
    }
    accumulate(params_.table, x, emb.row(r));
    norms[r] = normalize(emb.row(r));
    if (norms[r] <= kMinNorm) {
      throw DegenerateInput("input " + std::to_string(r) +
                            ": pre-normalization sum has zero norm");
    }
  }

  // Loss and dL/de for every input.
  LossAndGrad out;
  Matrix g_emb(n, D);
  for (const auto& term : batch.terms) {
    auto ea = emb.row(term.anchor);
    auto ep = emb.row(term.positive);
    const double s_pos = dot(ea, ep);
    for (std::size_t k : term.negatives) {
      auto en = emb.row(k);
      const double s_neg = dot(ea, en);
      out.loss += triplet_term(s_pos, s_neg, gamma, kind);
      const double slope = triplet_term_slope(s_pos, s_neg, gamma, kind);
      if (slope == 0.0) continue;
      auto ga = g_emb.row(term.anchor);
      auto gp = g_emb.row(term.positive);
      auto gn = g_emb.row(k);
      for (std::size_t c = 0; c < D; ++c) {
        ga[c] += slope * (en[c] - ep[c]);
        gp[c] -= slope * ea[c];
        gn[c] += slope * ea[c];
      }
    }
  }

  // Backward through the normalization e = u / |u| and the weighted sum.
  out.grad.assign(params_.table.data().size(), 0.0);
  std::vector<double> gu(D);
  for (std::size_t r = 0; r < n; ++r) {
    auto g = g_emb.row(r);
    auto e = emb.row(r);
    const double ge = dot(g, e);
    bool any = false;
    for (std::size_t c = 0; c < D; ++c) {
      gu[c] = (g[c] - ge * e[c]) / norms[r];
      any = any || gu[c] != 0.0;
    }
    if (!any) continue;
    for (const auto& ent : batch.inputs[r]->entries()) {
      double* dst = out.grad.data() + std::size_t{ent.feature} * D;
      for (std::size_t c = 0; c < D; ++c) dst[c] += ent.value * gu[c];
    }
  }
  return out;
}

void save_encoder(const std::string& path, const EncoderParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::put_magic(out, kEncoderMagic);
  binio::put<std::uint32_t>(out, kEncoderVersion);
  binio::put<std::uint64_t>(out, params.vocab());
  binio::put<std::uint64_t>(out, params.dim());
  for (double v : params.table.data()) {
    binio::put<float>(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("failed writing " + path);
}

EncoderParams load_encoder(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  binio::expect_magic(in, kEncoderMagic, path);
  const auto version = binio::get<std::uint32_t>(in, path);
  if (version != kEncoderVersion) {
    throw FormatError(path + ": unsupported encoder version " +
                      std::to_string(version));
  }
  const auto V = binio::get<std::uint64_t>(in, path);
  const auto D = binio::get<std::uint64_t>(in, path);
  EncoderParams p{Matrix(V, D)};
  for (double& v : p.table.data()) {
    v = binio::get<float>(in, path);
    if (!std::isfinite(v)) throw ValueError(path + ": non-finite parameter");
  }
  return p;
}

}  // namespace xcm
