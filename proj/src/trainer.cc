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

#include "xcmine/trainer.h"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <unordered_map>

#include "xcmine/ann.h"
#include "xcmine/binio.h"
#include "xcmine/clustering.h"

namespace xcm {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::string_view kClassifierMagic = "XCMCLS01";
constexpr std::uint32_t kClassifierVersion = 1;

// Seed streams branched off the master seed.
enum Stream : std::uint64_t {
  kPositiveSampling = 1,
  kEvalSample = 2,
  kClusterBase = 1u << 20,
  kPlanBase = 2u << 20,
  kIndexBase = 3u << 20,
};

std::vector<PointId> eval_points(const std::vector<PointId>& eligible,
                                 std::size_t sample, std::uint64_t seed) {
  if (sample == 0 || sample >= eligible.size()) return eligible;
  std::vector<PointId> pick = eligible;
  Rng rng(derive_seed(seed, kEvalSample));
  shuffle(pick, rng);
  pick.resize(sample);
  std::sort(pick.begin(), pick.end());
  return pick;
}

LabelId sample_positive(const std::vector<LabelId>& pos, Rng& rng) {
  return pos[uniform_index(rng, pos.size())];
}

std::vector<std::vector<LabelId>> positives_of(
    const Dataset& data, std::span<const std::uint32_t> batch) {
  std::vector<std::vector<LabelId>> out;
  out.reserve(batch.size());
  for (auto i : batch) out.push_back(data.positives(i));
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::uint32_t> ids) {
  Matrix out(ids.size(), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto src = m.row(ids[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, const AdamHyper& hyper) {
  if (params.size() != grads.size()) {
    throw ConfigError("adam: parameter and gradient sizes differ");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericsError("non-finite gradient");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  } else if (state.m.size() != params.size()) {
    throw ConfigError("adam: state shape does not match parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    state.m[k] = hyper.beta1 * state.m[k] + (1.0 - hyper.beta1) * g;
    state.v[k] = hyper.beta2 * state.v[k] + (1.0 - hyper.beta2) * g * g;
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    params[k] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
  }
}

void TrainConfig::validate() const {
  miner.validate();
  if (!(m1_learning_rate > 0.0) || !(m2_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be > 0");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  if (!(gamma >= 0.0)) throw ConfigError("margin gamma must be >= 0");
}

double p_at_1(const Dataset& data, const Matrix& point_emb,
              std::span<const PointId> points, const Matrix& label_vectors) {
  if (points.empty()) return 0.0;
  std::vector<char> hit(points.size(), 0);
  parallel_for(points.size(), [&](std::size_t r) {
    LabelId best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (LabelId l = 0; l < label_vectors.rows(); ++l) {
      const double s = dot(point_emb.row(r), label_vectors.row(l));
      if (s > best_score) {
        best_score = s;
        best = l;
      }
    }
    hit[r] = data.is_positive(points[r], best) ? 1 : 0;
  });
  std::size_t total = 0;
  for (char h : hit) total += static_cast<std::size_t>(h);
  return static_cast<double>(total) / static_cast<double>(points.size());
}

double embedding_p_at_1(const Dataset& data, const Encoder& encoder,
                        std::span<const PointId> points) {
  const Matrix pe = encoder.embed_rows(data.point_features(), points);
  const Matrix le = encoder.embed_batch(data.label_features());
  return p_at_1(data, pe, points, le);
}

M1Result train_m1(const Dataset& data, Encoder& encoder,
                  const TrainConfig& config) {
  config.validate();
  const MinerConfig& mc = config.miner;
  const std::vector<PointId> eligible = data.eligible_points();
  if (eligible.empty()) {
    throw ConfigError("M1 needs at least one point with positive labels");
  }
  const std::vector<PointId> eval = eval_points(eligible, config.eval_sample,
                                                config.seed);
  std::vector<std::uint32_t> row_of(data.num_points(), 0);
  for (std::uint32_t r = 0; r < eligible.size(); ++r) row_of[eligible[r]] = r;

  AdamState adam;
  const AdamHyper hyper{config.m1_learning_rate, config.beta1, config.beta2,
                        config.adam_epsilon};
  Rng pos_rng(derive_seed(config.seed, kPositiveSampling));

  Clustering clustering;
  std::size_t clustered_at = 0;  // cluster size of the current clustering
  HardNegatives global_negatives;
  // Point embeddings left behind by the per-batch forward passes; NGAME
  // re-clusters these instead of re-encoding the whole training set.
  Matrix point_cache(eligible.size(), encoder.dim());
  bool cache_ready = false;

  M1Result result;
  for (std::size_t epoch = 0; epoch < config.m1_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    std::size_t C = mc.cluster_size;
    if (mc.curriculum.enabled && mc.strategy == MinerStrategy::kNgame) {
      C = curriculum_cluster_size(mc.cluster_size, epoch,
                                  mc.curriculum.doubling_period,
                                  mc.curriculum.max_cluster_size);
    }
    entry.cluster_size = C;

    // Mining overhead: clustering refresh or global index refresh.
    auto t0 = Clock::now();
    switch (mc.strategy) {
      case MinerStrategy::kNgame:
        if (epoch % mc.refresh_interval == 0 || C != clustered_at) {
          if (!cache_ready) {
            point_cache = encoder.embed_rows(data.point_features(), eligible);
          }
          clustering = balanced_cluster(
              point_cache, C, derive_seed(config.seed, kClusterBase + epoch));
          clustered_at = C;
        }
        break;
      case MinerStrategy::kStaticCluster:
        if (epoch == 0) {
          const Matrix emb =
              encoder.embed_rows(data.point_features(), eligible);
          clustering = balanced_cluster(
              emb, C, derive_seed(config.seed, kClusterBase + epoch));
          clustered_at = C;
        }
        break;
      case MinerStrategy::kAnnsRefresh:
        if (epoch % mc.refresh_interval == 0) {
          const Matrix pe = encoder.embed_rows(data.point_features(), eligible);
          Matrix le = encoder.embed_batch(data.label_features());
          IndexOptions io;
          io.mode = IndexMode::kApproximate;
          io.seed = derive_seed(config.seed, kIndexBase + epoch);
          const MipsIndex index(std::move(le), io);
          global_negatives = anns_refresh_negatives(
              pe, index, positives_of(data, eligible), mc.max_negatives);
        }
        break;
      case MinerStrategy::kUniform:
        break;
    }
    entry.sampling_seconds = seconds_since(t0);

    t0 = Clock::now();
    const std::uint64_t plan_seed = derive_seed(config.seed, kPlanBase + epoch);
    const bool clustered = mc.strategy == MinerStrategy::kNgame ||
                           mc.strategy == MinerStrategy::kStaticCluster;
    const MiniBatchPlan plan =
        clustered ? plan_epoch(clustering, mc.batch_size, plan_seed, eligible)
                  : uniform_plan(eligible, mc.batch_size, plan_seed);

    double epoch_loss = 0.0;
    for (const auto& batch : plan.batches) {
      TripletBatch tb;
      std::unordered_map<LabelId, std::size_t> label_slot;
      auto slot_of = [&](LabelId l) {
        auto [it, inserted] = label_slot.emplace(l, tb.inputs.size());
        if (inserted) tb.inputs.push_back(&data.label(l));
        return it->second;
      };
      for (auto i : batch) tb.inputs.push_back(&data.point(i));

      HardNegatives negatives;
      if (mc.strategy == MinerStrategy::kAnnsRefresh) {
        negatives.reserve(batch.size());
        for (auto i : batch) negatives.push_back(global_negatives[row_of[i]]);
      } else {
        const auto pool = batch_label_pool(batch, data.point_labels());
        const Matrix pe = encoder.embed_rows(data.point_features(), batch);
        const Matrix le = encoder.embed_rows(data.label_features(), pool);
        negatives = select_hard_negatives(pe, le, pool,
                                          positives_of(data, batch),
                                          mc.radius, mc.max_negatives);
        if (mc.strategy == MinerStrategy::kNgame) {
          for (std::size_t b = 0; b < batch.size(); ++b) {
            std::copy(pe.row(b).begin(), pe.row(b).end(),
                      point_cache.row(row_of[batch[b]]).begin());
          }
        }
      }

      for (std::size_t b = 0; b < batch.size(); ++b) {
        const LabelId pos = sample_positive(data.positives(batch[b]), pos_rng);
        if (negatives[b].empty()) continue;
        TripletBatch::Term term;
        term.anchor = b;
        term.positive = slot_of(pos);
        for (LabelId k : negatives[b]) term.negatives.push_back(slot_of(k));
        entry.negatives += term.negatives.size();
        tb.terms.push_back(std::move(term));
      }
      if (tb.terms.empty()) continue;
      LossAndGrad lg = encoder.loss_and_grad(tb, config.gamma, config.loss);
      if (!std::isfinite(lg.loss)) throw NumericsError("non-finite M1 loss");
      epoch_loss += lg.loss;
      adam_step(encoder.parameters(), lg.grad, adam, hyper);
    }
    entry.seconds = seconds_since(t0);
    cache_ready = mc.strategy == MinerStrategy::kNgame;
    entry.loss = epoch_loss / static_cast<double>(eligible.size());
    if (config.eval_each_epoch) {
      entry.p_at_1 = embedding_p_at_1(data, encoder, eval);
    }
    log(LogLevel::kInfo, "m1 epoch " + std::to_string(epoch) + " loss " +
                             std::to_string(entry.loss) + " p@1 " +
                             std::to_string(entry.p_at_1));
    result.log.push_back(entry);
    if (config.eval_each_epoch && config.stop_at_p1 > 0.0 &&
        entry.p_at_1 >= config.stop_at_p1) {
      break;
    }
  }
  return result;
}

M2Result train_m2(const Dataset& data, const Encoder& encoder,
                  const TrainConfig& config) {
  const std::vector<PointId> eligible = data.eligible_points();
  Matrix point_emb(data.num_points(), encoder.dim());
  const Matrix pe = encoder.embed_rows(data.point_features(), eligible);
  for (std::size_t r = 0; r < eligible.size(); ++r) {
    std::copy(pe.row(r).begin(), pe.row(r).end(),
              point_emb.row(eligible[r]).begin());
  }
  return train_m2(data, point_emb, encoder.embed_batch(data.label_features()),
                  config);
}

M2Result train_m2(const Dataset& data, const Matrix& point_emb,
                  const Matrix& label_emb, const TrainConfig& config) {
  config.validate();
  const MinerConfig& mc = config.miner;
  M2Result result;
  result.bank.weights = label_emb;
  if (config.m2_epochs == 0) return result;

  const std::vector<PointId> eligible = data.eligible_points();
  if (eligible.empty()) {
    throw ConfigError("M2 needs at least one point with positive labels");
  }
  const std::vector<PointId> eval = eval_points(eligible, config.eval_sample,
                                                config.seed);
  const Matrix eval_emb = gather_rows(point_emb, eval);
  Matrix& W = result.bank.weights;
  const std::size_t D = W.cols();

  AdamState adam;
  const AdamHyper hyper{config.m2_learning_rate, config.beta1, config.beta2,
                        config.adam_epsilon};
  Rng pos_rng(derive_seed(config.seed, kPositiveSampling));

  // Embeddings are frozen, so the clustering is computed once.
  auto t0 = Clock::now();
  const Matrix eligible_emb = gather_rows(point_emb, eligible);
  const Clustering clustering =
      mc.strategy == MinerStrategy::kUniform ||
              mc.strategy == MinerStrategy::kAnnsRefresh
          ? singleton_clustering(eligible.size())
          : balanced_cluster(eligible_emb, mc.cluster_size,
                             derive_seed(config.seed, kClusterBase));
  double pending_sampling = seconds_since(t0);

  MiniBatchPlan plan;
  std::vector<HardNegatives> negatives;  // per batch
  std::vector<double> grad(W.data().size());
  for (std::size_t epoch = 0; epoch < config.m2_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.cluster_size = mc.cluster_size;

    // Re-mine against the current classifiers every tau epochs.
    t0 = Clock::now();
    if (epoch % mc.refresh_interval == 0) {
      plan = plan_epoch(clustering, mc.batch_size,
                        derive_seed(config.seed, kPlanBase + epoch), eligible);
      negatives.clear();
      for (const auto& batch : plan.batches) {
        const auto pool = batch_label_pool(batch, data.point_labels());
        negatives.push_back(select_hard_negatives(
            gather_rows(point_emb, batch), gather_rows(W, pool), pool,
            positives_of(data, batch), mc.radius, mc.max_negatives));
      }
    }
    entry.sampling_seconds = seconds_since(t0) + pending_sampling;
    pending_sampling = 0.0;

    t0 = Clock::now();
    double epoch_loss = 0.0;
    for (std::size_t bi = 0; bi < plan.batches.size(); ++bi) {
      const auto& batch = plan.batches[bi];
      std::fill(grad.begin(), grad.end(), 0.0);
      bool any = false;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        const PointId i = batch[b];
        const LabelId pos = sample_positive(data.positives(i), pos_rng);
        auto e = point_emb.row(i);
        const double s_pos = dot(W.row(pos), e);
        for (LabelId k : negatives[bi][b]) {
          const double s_neg = dot(W.row(k), e);
          epoch_loss += triplet_term(s_pos, s_neg, config.gamma, config.loss);
          const double slope =
              triplet_term_slope(s_pos, s_neg, config.gamma, config.loss);
          ++entry.negatives;
          if (slope == 0.0) continue;
          any = true;
          double* gk = grad.data() + std::size_t{k} * D;
          double* gl = grad.data() + std::size_t{pos} * D;
          for (std::size_t c = 0; c < D; ++c) {
            gk[c] += slope * e[c];
            gl[c] -= slope * e[c];
          }
        }
      }
      if (!any) continue;
      adam_step(W.data(), grad, adam, hyper);
      for (std::size_t l = 0; l < W.rows(); ++l) {
        if (normalize(W.row(l)) <= 0.0) {
          throw NumericsError("classifier " + std::to_string(l) +
                              " collapsed to zero");
        }
      }
    }
    entry.seconds = seconds_since(t0);
    entry.loss = epoch_loss / static_cast<double>(eligible.size());
    if (config.eval_each_epoch) entry.p_at_1 = p_at_1(data, eval_emb, eval, W);
    log(LogLevel::kInfo, "m2 epoch " + std::to_string(epoch) + " loss " +
                             std::to_string(entry.loss) + " p@1 " +
                             std::to_string(entry.p_at_1));
    result.log.push_back(entry);
  }
  return result;
}

void save_classifiers(const std::string& path, const ClassifierBank& bank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  binio::put_magic(out, kClassifierMagic);
  binio::put<std::uint32_t>(out, kClassifierVersion);
  binio::put<std::uint64_t>(out, bank.weights.rows());
  binio::put<std::uint64_t>(out, bank.weights.cols());
  for (double v : bank.weights.data()) {
    binio::put<float>(out, static_cast<float>(v));
  }
  if (!out) throw FormatError("failed writing " + path);
}

ClassifierBank load_classifiers(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  binio::expect_magic(in, kClassifierMagic, path);
  const auto version = binio::get<std::uint32_t>(in, path);
  if (version != kClassifierVersion) {
    throw FormatError(path + ": unsupported classifier version " +
                      std::to_string(version));
  }
  const auto L = binio::get<std::uint64_t>(in, path);
  const auto D = binio::get<std::uint64_t>(in, path);
  ClassifierBank bank{Matrix(L, D)};
  for (double& v : bank.weights.data()) v = binio::get<float>(in, path);
  // Stored as f32; re-project so the unit-norm contract survives the cast.
  for (std::size_t l = 0; l < L; ++l) normalize(bank.weights.row(l));
  return bank;
}

void write_train_log(const std::string& path,
                     const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "epoch,loss,p_at_1,seconds\n";
  out.precision(10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.loss << ',' << e.p_at_1 << ','
        << e.seconds + e.sampling_seconds << '\n';
  }
}

}  // namespace xcm
