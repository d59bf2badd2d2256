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


#include <cmath>

#include "doctest.h"
#include "oracles.h"
#include "xcmine/synth.h"
#include "xcmine/theory.h"

using namespace xcm;

namespace {

const SparseVector kToken({{0, 1.0}}, 1);

Dataset with_relevance(std::size_t n, std::size_t l,
                       std::vector<std::vector<LabelId>> rel) {
  return build_dataset(std::vector<SparseVector>(n, kToken),
                       std::vector<SparseVector>(l, kToken), std::move(rel));
}

Matrix unit_x(std::size_t n) {
  Matrix m(n, 2, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, 0) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("embedding goodness on hand-built cases") {
  const Dataset d = with_relevance(2, 2, {{0}, {1}});
  // Every positive pair coincides.
  CHECK(embedding_goodness(d, unit_x(2), unit_x(2), 0.1) == 0.0);
  // Second pair at distance 0.6.
  Matrix le = unit_x(2);
  const double c = 1.0 - 0.18;  // 2 - 2c = 0.36
  le(1, 0) = c;
  le(1, 1) = std::sqrt(1.0 - c * c);
  CHECK(embedding_goodness(d, unit_x(2), le, 0.5) == 0.5);
  CHECK(embedding_goodness(d, unit_x(2), le, 0.7) == 0.0);
  CHECK_THROWS_AS(
      embedding_goodness(with_relevance(2, 2, {{}, {}}), unit_x(2), le, 0.5),
      DegenerateInput);
}

TEST_CASE("bound constants") {
  std::vector<std::vector<LabelId>> rel;
  for (LabelId i = 0; i < 10; ++i) rel.push_back({i % 5});
  const BoundConstants c = bound_constants(compute_stats(with_relevance(10, 5, rel)));
  CHECK(c.c1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(c.c2 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(bound_constants(compute_stats(with_relevance(2, 2, {{0}, {0}}))),
                  DegenerateInput);
}

TEST_CASE("balanced constants stay below one") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = oracle::random_bound_instance(seed, true);
    const BoundConstants c = bound_constants(compute_stats(inst.data));
    // N = 100, L = 50, q = 2: c1 = (N - q) / N, c2 = pN / (qL).
    CHECK(c.c1 == doctest::Approx(0.98).epsilon(1e-15));
    CHECK(c.c2 == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("constants match the direct formula on unbalanced data") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = oracle::random_bound_instance(seed, false);
    const BoundConstants c = bound_constants(compute_stats(inst.data));
    const auto [c1, c2] = oracle::constants(inst.data);
    CHECK(c.c1 == doctest::Approx(c1).epsilon(1e-12));
    CHECK(c.c2 == doctest::Approx(c2).epsilon(1e-12));
  }
}

TEST_CASE("goodness quantities and bad events match exhaustive oracles") {
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = oracle::random_bound_instance(seed, seed % 2 == 0);
    const std::size_t size = 1 + uniform_index(rng, 30);
    const Clustering cl = balanced_cluster(inst.point_emb, size, seed);
    for (double r : {0.3, 0.6, 1.0, 1.5}) {
      CAPTURE(r);
      CHECK(embedding_goodness(inst.data, inst.point_emb, inst.label_emb, r) ==
            doctest::Approx(oracle::epsilon1(inst.data, inst.point_emb,
                                             inst.label_emb, r))
                .epsilon(1e-15));
      const auto got = full_coverage_negatives(inst.data, inst.point_emb,
                                               inst.label_emb, cl, r);
      CHECK(bad_event_rate(inst.data, inst.point_emb, inst.label_emb, got, r) ==
            doctest::Approx(oracle::bad_events(inst.data, inst.point_emb,
                                               inst.label_emb, cl.assignment,
                                               r))
                .epsilon(1e-15));
    }
  }
}

TEST_CASE("goodness is monotone in the radius") {
  const auto inst = oracle::random_bound_instance(3, false);
  const Clustering cl = balanced_cluster(inst.point_emb, 10, 1);
  double e1 = 2.0, e2 = -1.0;
  for (double r = 0.05; r <= 2.0; r += 0.05) {
    const double a =
        embedding_goodness(inst.data, inst.point_emb, inst.label_emb, r);
    const double b = clustering_goodness(inst.point_emb, cl, r,
                                         GoodnessMode::Exact());
    CHECK(a <= e1);
    CHECK(b >= e2);
    e1 = a;
    e2 = b;
  }
}

TEST_CASE("one cluster leaves only labels nobody holds") {
  // Labels 0 and 1 are held; label 2 is nobody's positive.
  const Dataset d = with_relevance(2, 3, {{0}, {1}});
  const Matrix pe = unit_x(2), le = unit_x(3);
  const Clustering whole = Clustering::from_assignment({0, 0}, 1);
  const auto got = full_coverage_negatives(d, pe, le, whole, 0.5);
  CHECK(got[0] == std::vector<LabelId>{1});
  CHECK(got[1] == std::vector<LabelId>{0});
  // Misses: (0, 2) and (1, 2) out of 2 * 3 pairs.
  CHECK(bad_event_rate(d, pe, le, got, 0.5) ==
        doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  // Nothing within radius zero unless embeddings coincide exactly.
  Matrix spread(3, 2, 0.0);
  spread(0, 1) = 1.0;
  spread(1, 1) = -1.0;
  spread(2, 0) = -1.0;
  CHECK(bad_event_rate(d, pe, spread, {{}, {}}, 0.0) == 0.0);
  CHECK(bad_event_rate(d, pe, le, {{}, {}}, 0.0) ==
        doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("K = 1 reduces the bound to c1 * eps1") {
  const auto inst = oracle::random_bound_instance(8, false);
  const Clustering whole = Clustering::from_assignment(
      std::vector<std::uint32_t>(100, 0), 1);
  const GoodnessReport r =
      verify_bound(inst.data, inst.point_emb, inst.label_emb, whole, 0.6);
  CHECK(r.epsilon2 == 0.0);
  CHECK(r.bound_rhs == r.c1 * r.epsilon1);
  CHECK(r.holds);
}

TEST_CASE("the bound holds on random instances") {
  Rng rng(11);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const bool balanced = seed % 2 == 0;
    const auto inst = oracle::random_bound_instance(100 + seed, balanced);
    const std::size_t size = 1 + uniform_index(rng, 40);
    const double r = std::vector<double>{0.3, 0.6, 1.0}[seed % 3];
    const Clustering cl = balanced_cluster(inst.point_emb, size, seed);
    const GoodnessReport g =
        verify_bound(inst.data, inst.point_emb, inst.label_emb, cl, r);
    CAPTURE(seed);
    CHECK(g.holds);
    CHECK(g.bad_event_rate <= g.bound_rhs);
    CHECK(g.balanced == balanced);
    CHECK(g.epsilon2 ==
          doctest::Approx(oracle::epsilon2(inst.point_emb, cl.assignment, 2 * r))
              .epsilon(1e-15));
    if (balanced) {
      CHECK(g.corollary_holds);
      CHECK(g.corollary_rhs == doctest::Approx(g.epsilon1 + g.epsilon2)
                                   .epsilon(1e-12));
      CHECK(g.bound_rhs <= g.corollary_rhs + 1e-15);
    }
  }
}

TEST_CASE("encoder driven verification on synthetic data") {
  SynthSpec spec;
  spec.num_clusters = 5;
  spec.points_per_cluster = 20;
  spec.labels_per_cluster = 10;
  spec.dim = 8;
  spec.seed = 4;
  const SynthData sd = generate(spec);
  const BagOfEmbeddings enc(shared_token_init(spec, 2, 0.3));
  MinerConfig miner;
  miner.cluster_size = 10;
  const GoodnessReport g = verify_bound(sd.dataset, enc, miner, 0.6, 1);
  CHECK(g.holds);
  CHECK(g.num_clusters == 16);  // 2^ceil(log2(100 / 10))
  CHECK(g.balanced);
  const std::string text = format_goodness(g);
  CHECK(text.find("holds = true") != std::string::npos);
  CHECK(text.find("epsilon2 = ") != std::string::npos);
}
