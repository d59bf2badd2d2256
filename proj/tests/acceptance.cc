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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "xcmine/ann.h"
#include "xcmine/clustering.h"
#include "xcmine/infer.h"
#include "xcmine/metrics.h"
#include "xcmine/negmine.h"
#include "xcmine/synth.h"
#include "xcmine/theory.h"
#include "xcmine/trainer.h"

using namespace xcm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

template <typename T>
T median(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// ---------------------------------------------------------------------------
// 1. Bound verification on random instances.

Outcome bound_verification() {
  Outcome o;
  const auto t0 = Clock::now();
  Rng rng(2026);
  std::size_t balanced_seen = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < 50; ++i) {
    const bool balanced = i % 2 == 0;
    const auto inst = oracle::random_bound_instance(1000 + i, balanced);
    const double r = std::vector<double>{0.3, 0.6, 1.0}[i % 3];
    const std::size_t size = 1 + uniform_index(rng, 50);
    const Clustering cl = balanced_cluster(inst.point_emb, size, i);
    const GoodnessReport g =
        verify_bound(inst.data, inst.point_emb, inst.label_emb, cl, r);
    const std::string tag = "instance " + std::to_string(i);
    o.require(g.holds, tag + " bound violated");
    worst_slack = std::min(worst_slack, g.bound_rhs - g.bad_event_rate);
    if (balanced) {
      ++balanced_seen;
      const double sum = g.epsilon1 + g.epsilon2;
      const double rel = sum == 0.0 ? std::abs(g.corollary_rhs)
                                    : std::abs(g.corollary_rhs - sum) / sum;
      o.require(g.balanced, tag + " not detected as balanced");
      o.require(rel <= 1e-12, tag + " corollary rhs != eps1 + eps2");
      o.require(g.corollary_holds, tag + " corollary violated");
      o.require(g.c1 <= 1.0 && g.c2 == 1.0, tag + " balanced constants");
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 30.0, "runtime >= 30 s");
  o.detail << "50 instances (" << balanced_seen
           << " balanced), min slack " << worst_slack << ", " << elapsed
           << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Hard-negative selection against a brute-force double loop.

Outcome hard_negative_oracle() {
  Outcome o;
  Rng rng(77);
  std::size_t nonempty = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 32);
    const std::size_t labels = 5 + uniform_index(rng, 60);
    const std::size_t dim = 2 + uniform_index(rng, 8);
    std::vector<std::vector<LabelId>> positives(n);
    for (auto& p : positives) {
      const std::size_t k = 1 + uniform_index(rng, 4);
      for (std::size_t j = 0; j < k; ++j) {
        p.push_back(static_cast<LabelId>(uniform_index(rng, labels)));
      }
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    std::vector<std::uint32_t> batch(n);
    std::iota(batch.begin(), batch.end(), 0u);
    const auto pool = batch_label_pool(batch, positives);
    const Matrix pe = oracle::random_unit_rows(n, dim, rng);
    const Matrix le = oracle::random_unit_rows(pool.size(), dim, rng);
    const double r = 0.1 + 1.9 * uniform_real(rng);
    const std::size_t h =
        uniform_real(rng) < 0.3 ? kUncapped : 1 + uniform_index(rng, 8);
    const auto got = select_hard_negatives(pe, le, pool, positives, r, h);
    o.require(got == oracle::hard_negatives(pe, le, pool, positives, r, h),
              "batch " + std::to_string(trial));
    for (const auto& g : got) nonempty += !g.empty();
  }
  o.detail << "100 batches, " << nonempty << " points with negatives";
  return o;
}

// ---------------------------------------------------------------------------
// 3. Analytic gradient against central differences.

Outcome gradient_check() {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double e = oracle::gradient_check(seed, 6, 4, 1e-5);
    worst = std::max(worst, e);
    o.require(e <= 1e-4, "configuration " + std::to_string(seed));
  }
  o.detail << "10 configurations, max relative error " << worst;
  return o;
}

// ---------------------------------------------------------------------------
// Shared planted-cluster task for criteria 4 and 5.

SynthSpec convergence_task(std::uint64_t seed) {
  SynthSpec s;  // 8 clusters x 50 points x 10 labels
  s.noise = 0.05;
  s.tokens_per_point = 12;
  s.dim = 16;
  s.seed = seed;
  return s;
}

TrainConfig convergence_config(std::uint64_t seed, MinerStrategy strategy) {
  TrainConfig c;
  c.miner.batch_size = 8;
  c.miner.cluster_size = 4;
  c.miner.refresh_interval = 5;
  c.miner.radius = 2.0;
  c.miner.max_negatives = 5;
  c.miner.strategy = strategy;
  c.m1_learning_rate = 0.003;
  c.m1_epochs = 80;
  c.seed = seed;
  return c;
}

BagOfEmbeddings fresh_encoder(const SynthSpec& s, std::uint64_t seed) {
  return BagOfEmbeddings(init_params(s.vocab(), s.dim, derive_seed(seed, 1)));
}

constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();

std::size_t epochs_to(const std::vector<EpochLog>& log, double target) {
  for (std::size_t e = 0; e < log.size(); ++e) {
    if (log[e].p_at_1 >= target) return e + 1;
  }
  return kNever;
}

// ---------------------------------------------------------------------------
// 4. Epochs to P@1 >= 0.9, NGAME against uniform in-batch sampling.

Outcome convergence_ordering() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<std::size_t> ngame, uniform;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthSpec spec = convergence_task(seed);
    const Dataset d = generate(spec).dataset;
    for (auto strategy : {MinerStrategy::kNgame, MinerStrategy::kUniform}) {
      TrainConfig c = convergence_config(seed, strategy);
      c.stop_at_p1 = 0.9;
      BagOfEmbeddings enc = fresh_encoder(spec, seed);
      const auto n = epochs_to(train_m1(d, enc, c).log, 0.9);
      (strategy == MinerStrategy::kNgame ? ngame : uniform).push_back(n);
    }
  }
  const std::size_t mn = median(ngame), mu = median(uniform);
  const double elapsed = seconds_since(t0);
  o.require(mn != kNever, "NGAME never reached P@1 0.9");
  o.require(mn <= mu, "NGAME slower than uniform");
  o.require(mu != kNever && static_cast<double>(mu) >= 1.5 * mn,
            "uniform needs < 1.5x NGAME epochs");
  o.require(elapsed < 300.0, "runtime >= 5 min");
  auto show = [](const std::vector<std::size_t>& v) {
    std::string s;
    for (auto x : v) {
      s += (s.empty() ? "" : ",") +
           (x == kNever ? std::string("never") : std::to_string(x));
    }
    return s;
  };
  o.detail << "median epochs ngame " << mn << " [" << show(ngame)
           << "], uniform " << mu << " [" << show(uniform) << "], ratio "
           << static_cast<double>(mu) / static_cast<double>(mn) << ", "
           << elapsed << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Mining overhead relative to training time.

// Runs are deterministic, so every repeat does identical work; the minimum
// over repeats strips scheduler noise from each epoch's timings.
std::pair<double, double> timed_run(const SynthSpec& spec, const Dataset& d,
                                    std::uint64_t seed, MinerStrategy strategy,
                                    std::size_t epochs, int repeats) {
  std::vector<double> train(epochs, 1e300), sampling(epochs, 1e300);
  for (int rep = 0; rep < repeats; ++rep) {
    TrainConfig c = convergence_config(seed, strategy);
    c.m1_epochs = epochs;
    c.eval_each_epoch = false;
    BagOfEmbeddings enc = fresh_encoder(spec, seed);
    const auto log = train_m1(d, enc, c).log;
    for (std::size_t e = 0; e < epochs; ++e) {
      train[e] = std::min(train[e], log[e].seconds);
      sampling[e] = std::min(sampling[e], log[e].sampling_seconds);
    }
  }
  return {std::accumulate(train.begin(), train.end(), 0.0),
          std::accumulate(sampling.begin(), sampling.end(), 0.0)};
}

Outcome overhead_accounting() {
  Outcome o;
  constexpr std::size_t kEpochs = 20;
  constexpr int kRepeats = 5;
  std::vector<double> ngame, anns;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SynthSpec spec = convergence_task(seed);
    const Dataset d = generate(spec).dataset;
    const auto [nt, ns] =
        timed_run(spec, d, seed, MinerStrategy::kNgame, kEpochs, kRepeats);
    const auto [at, as] = timed_run(spec, d, seed, MinerStrategy::kAnnsRefresh,
                                    kEpochs, kRepeats);
    ngame.push_back(ns / nt);
    anns.push_back(as / at);
  }
  const double mn = median(ngame), ma = median(anns);
  o.require(mn <= 0.05, "NGAME overhead above 5%");
  o.require(ma > mn, "anns_refresh overhead not above NGAME");
  o.detail << "median sampling/training: ngame " << 100.0 * mn
           << "%, anns_refresh " << 100.0 * ma << "% over " << kEpochs
           << " epochs x 5 seeds";
  return o;
}

// ---------------------------------------------------------------------------
// 6. Modular training contracts.

double predictor_p_at_1(const Dataset& d, const Predictor& p,
                        const Matrix& point_emb) {
  std::size_t hits = 0, n = 0;
  for (PointId i = 0; i < d.num_points(); ++i) {
    if (d.positives(i).empty()) continue;
    ++n;
    hits += d.is_positive(i, p.predict_embedding(point_emb.row(i), 1)[0].id);
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

Outcome modular_training() {
  Outcome o;
  SynthSpec spec;
  spec.num_clusters = 4;
  spec.points_per_cluster = 40;
  spec.labels_per_cluster = 8;
  spec.tokens_per_point = 12;
  spec.noise = 0.05;
  spec.seed = 3;
  const Dataset d = generate(spec).dataset;
  BagOfEmbeddings enc = fresh_encoder(spec, 3);

  TrainConfig c = convergence_config(3, MinerStrategy::kNgame);
  c.m1_epochs = 5;
  c.m2_epochs = 0;
  train_m1(d, enc, c);
  const Matrix label_emb = enc.embed_batch(d.label_features());
  const Matrix point_emb = enc.embed_batch(d.point_features());
  o.require(train_m2(d, point_emb, label_emb, c).bank.weights == label_emb,
            "zero-epoch M2 differs from label embeddings");

  c.m2_epochs = 30;
  c.m2_learning_rate = 0.01;
  const M2Result m2 = train_m2(d, point_emb, label_emb, c);
  const auto pts = d.eligible_points();
  Matrix rows(pts.size(), enc.dim());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    std::copy(point_emb.row(pts[k]).begin(), point_emb.row(pts[k]).end(),
              rows.row(k).begin());
  }
  const double emb = p_at_1(d, rows, pts, label_emb);
  const double cls = p_at_1(d, rows, pts, m2.bank.weights);

  Predictor pred(enc, label_emb, m2.bank, d.label_frequencies());
  const auto pairs =
      build_fusion_training_set(d, pts, pred, pred.shortlist_size(5));
  pred.set_fusion(fit_tree(pairs));
  const double fused = predictor_p_at_1(d, pred, point_emb);

  o.require(cls >= emb, "classifier P@1 below embedding P@1");
  o.require(fused >= std::max(emb, cls) - 0.01, "fused P@1 below max - 0.01");
  o.detail << "P@1 embedding " << emb << ", classifier " << cls
           << ", fused " << fused;
  return o;
}

// ---------------------------------------------------------------------------
// 7. Retrieval exactness and approximate recall.

Outcome retrieval() {
  Outcome o;
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 400);
    const std::size_t dim = 2 + uniform_index(rng, 14);
    const std::size_t k = 1 + uniform_index(rng, 30);
    const Matrix v = oracle::random_unit_rows(n, dim, rng);
    const Matrix q = oracle::random_unit_rows(1, dim, rng);
    std::vector<ScoredId> all;
    for (std::uint32_t i = 0; i < n; ++i) all.push_back({i, dot(v.row(i), q.row(0))});
    std::sort(all.begin(), all.end(), ranks_before);
    if (all.size() > k) all.resize(k);
    o.require(MipsIndex(v).query(q.row(0), k) == all,
              "trial " + std::to_string(trial));
  }
  const Matrix v = oracle::random_unit_rows(1000, 16, rng);
  const Matrix q = oracle::random_unit_rows(200, 16, rng);
  IndexOptions opt;
  opt.mode = IndexMode::kApproximate;
  const MipsIndex approx(v, opt), exact(v);
  const double rec = recall_at_k(approx, exact, q, 10);
  o.require(rec >= 0.95, "approximate recall@10 below 0.95");
  o.detail << "100 exact top-k trials, approximate recall@10 " << rec;
  return o;
}

// ---------------------------------------------------------------------------
// 8. Metrics against brute force.

Outcome metric_oracles() {
  Outcome o;
  Rng rng(8);
  std::vector<std::size_t> freq(20);
  for (auto& f : freq) f = uniform_index(rng, 50);
  const auto pm = propensities(freq, 1000);
  PropensityModel flat;
  flat.propensity.assign(20, 1.0);
  double worst = 0.0;
  std::size_t reductions = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabelId> all(20);
    std::iota(all.begin(), all.end(), 0u);
    shuffle(all, rng);
    const std::vector<LabelId> ranked(all.begin(),
                                      all.begin() + uniform_index(rng, 10));
    shuffle(all, rng);
    std::vector<LabelId> relevant(all.begin(),
                                  all.begin() + uniform_index(rng, 8));
    std::sort(relevant.begin(), relevant.end());
    for (std::size_t k = 1; k <= 5; ++k) {
      const double diffs[] = {
          precision_at_k(ranked, relevant, k) - oracle::precision(ranked, relevant, k),
          recall_at_k(ranked, relevant, k) - oracle::recall(ranked, relevant, k),
          ndcg_at_k(ranked, relevant, k) - oracle::ndcg(ranked, relevant, k),
          psp_at_k(ranked, relevant, pm, k) -
              oracle::psp(ranked, relevant, pm.propensity, k),
          psn_at_k(ranked, relevant, pm, k) -
              oracle::psn(ranked, relevant, pm.propensity, k)};
      for (double e : diffs) worst = std::max(worst, std::abs(e));
      if (relevant.size() >= k) {
        ++reductions;
        o.require(std::abs(psp_at_k(ranked, relevant, flat, k) -
                           precision_at_k(ranked, relevant, k)) <= 1e-12,
                  "uniform-propensity reduction");
      }
    }
  }
  o.require(worst <= 1e-12, "metric differs from oracle");
  o.detail << "100 cases x k=1..5, max abs error " << worst << ", "
           << reductions << " reduction checks";
  return o;
}

// ---------------------------------------------------------------------------
// 9. Clustering contract.

Outcome clustering_contract() {
  Outcome o;
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + uniform_index(rng, 200);
    const std::size_t dim = 2 + uniform_index(rng, 10);
    const std::size_t size = 1 + uniform_index(rng, 25);
    const Matrix x = oracle::random_unit_rows(n, dim, rng);
    const std::uint64_t seed = rng();
    const Clustering c = balanced_cluster(x, size, seed);
    const std::string tag = "set " + std::to_string(trial);
    o.require(c.max_cluster_size() - c.min_cluster_size() <= 1, tag + " balance");
    o.require(balanced_cluster(x, size, seed).assignment == c.assignment,
              tag + " determinism");
    const Clustering one = balanced_cluster(x, n, seed);
    double prev = 0.0;
    for (double r = 0.0; r <= 2.0001; r += 0.05) {
      o.require(one.num_clusters() == 1 &&
                    clustering_goodness(x, one, r, GoodnessMode::Exact()) == 0.0,
                tag + " eps2 at K = 1");
      const double e = clustering_goodness(x, c, r, GoodnessMode::Exact());
      o.require(e >= prev, tag + " monotone");
      prev = e;
    }
  }
  o.detail << "20 embedding sets";
  return o;
}

// ---------------------------------------------------------------------------
// 10. Reduction identities.

Outcome reductions() {
  Outcome o;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<std::uint32_t> ids(37);
    std::iota(ids.begin(), ids.end(), 100u);
    const auto u = uniform_plan(ids, 8, seed);
    const auto p = plan_epoch(singleton_clustering(37), 8, seed, ids);
    o.require(u.batches == p.batches, "C = 1 plan differs from uniform");
  }
  const std::size_t want[] = {8, 8, 16, 16, 32, 64, 64};
  const std::size_t epochs[] = {0, 24, 25, 49, 50, 75, 1000};
  for (int i = 0; i < 7; ++i) {
    o.require(curriculum_cluster_size(8, epochs[i], 25, 64) == want[i],
              "curriculum at epoch " + std::to_string(epochs[i]));
  }
  o.detail << "20 seeds, curriculum 8 -> 64 every 25 epochs";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {"bound verification", bound_verification},
      {"hard-negative oracle", hard_negative_oracle},
      {"gradient check", gradient_check},
      {"convergence ordering", convergence_ordering},
      {"overhead accounting", overhead_accounting},
      {"modular training", modular_training},
      {"retrieval exactness", retrieval},
      {"metric oracles", metric_oracles},
      {"clustering contract", clustering_contract},
      {"reduction identities", reductions},
  };
  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    bool pass = false;
    std::string detail;
    try {
      Outcome o = c.run();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << ' ' << index << ' ' << c.name
              << ": " << detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
