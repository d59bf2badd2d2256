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
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "xcmine/trainer.h"

using namespace xcm;

namespace {

// 20 points, 10 labels. Point i carries the token of its label i % 10 plus a
// private token; label l is described by its own token.
Dataset separable_toy() {
  const std::size_t vocab = 30;
  std::vector<SparseVector> pts, lbl;
  std::vector<std::vector<LabelId>> rel;
  for (std::uint32_t i = 0; i < 20; ++i) {
    pts.emplace_back(std::vector<SparseEntry>{{i % 10, 1.0}, {10 + i, 0.5}},
                     vocab);
    rel.push_back({i % 10});
  }
  for (std::uint32_t l = 0; l < 10; ++l) {
    lbl.emplace_back(std::vector<SparseEntry>{{l, 1.0}}, vocab);
  }
  return build_dataset(pts, lbl, rel);
}

TrainConfig toy_config() {
  TrainConfig c;
  c.miner.batch_size = 4;
  c.miner.cluster_size = 2;
  c.miner.radius = 2.0;
  c.m1_epochs = 50;
  c.m1_learning_rate = 0.01;
  c.m2_epochs = 20;
  c.m2_learning_rate = 0.01;
  c.seed = 3;
  return c;
}

std::vector<PointId> all_points(const Dataset& d) {
  return d.eligible_points();
}

}  // namespace

TEST_CASE("adam leaves parameters alone on a zero gradient") {
  std::vector<double> p{1.0, -2.0};
  AdamState s;
  adam_step(p, std::vector<double>{0.0, 0.0}, s, {});
  CHECK(p == std::vector<double>{1.0, -2.0});
  CHECK(s.step == 1);
}

TEST_CASE("first adam step has unit normalized magnitude") {
  std::vector<double> p{0.0};
  AdamState s;
  adam_step(p, std::vector<double>{1.0}, s, {0.001, 0.9, 0.999, 1e-8});
  CHECK(p[0] == doctest::Approx(-0.001 / (1.0 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("two adam steps match a hand calculation") {
  const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.5;
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 2; ++t) {
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    x -= lr * mh / (std::sqrt(vh) + eps);
  }
  std::vector<double> p{1.0};
  AdamState s;
  adam_step(p, std::vector<double>{g}, s, {lr, b1, b2, eps});
  adam_step(p, std::vector<double>{g}, s, {lr, b1, b2, eps});
  CHECK(p[0] == doctest::Approx(x).epsilon(1e-14));
  // Constant gradients keep the step size at lr.
  CHECK(p[0] == doctest::Approx(1.0 - 2 * lr).epsilon(1e-6));
}

TEST_CASE("adam rejects non-finite gradients without touching parameters") {
  std::vector<double> p{1.0, 2.0};
  AdamState s;
  CHECK_THROWS_AS(adam_step(p, std::vector<double>{0.1, NAN}, s, {}),
                  NumericsError);
  CHECK(p == std::vector<double>{1.0, 2.0});
  CHECK(s.step == 0);
  CHECK_THROWS_AS(adam_step(p, std::vector<double>{0.1}, s, {}), ConfigError);
}

TEST_CASE("M1 with zero epochs returns the initial parameters") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  const Matrix before = enc.params().table;
  TrainConfig c = toy_config();
  c.m1_epochs = 0;
  CHECK(train_m1(d, enc, c).log.empty());
  CHECK(enc.params().table == before);
}

TEST_CASE("M1 separates the toy task") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  const M1Result r = train_m1(d, enc, toy_config());
  REQUIRE(r.log.size() == 50);
  CHECK(r.log.back().p_at_1 == 1.0);
  CHECK(embedding_p_at_1(d, enc, all_points(d)) == 1.0);
  double tail = 0;
  for (std::size_t e = 45; e < 50; ++e) {
    CHECK(std::isfinite(r.log[e].loss));
    tail += r.log[e].loss / 5;
  }
  CHECK(tail < r.log.front().loss);
}

TEST_CASE("M1 is deterministic under seed") {
  const Dataset d = separable_toy();
  BagOfEmbeddings a(init_params(30, 8, 1)), b(init_params(30, 8, 1));
  TrainConfig c = toy_config();
  c.m1_epochs = 10;
  const auto la = train_m1(d, a, c).log;
  const auto lb = train_m1(d, b, c).log;
  CHECK(a.params().table == b.params().table);
  for (std::size_t e = 0; e < la.size(); ++e) CHECK(la[e].loss == lb[e].loss);
}

TEST_CASE("every strategy trains") {
  const Dataset d = separable_toy();
  for (auto s : {MinerStrategy::kNgame, MinerStrategy::kUniform,
                 MinerStrategy::kStaticCluster, MinerStrategy::kAnnsRefresh}) {
    CAPTURE(to_string(s));
    BagOfEmbeddings enc(init_params(30, 8, 1));
    TrainConfig c = toy_config();
    c.miner.strategy = s;
    c.m1_epochs = 12;
    const auto log = train_m1(d, enc, c).log;
    REQUIRE(log.size() == 12);
    for (const auto& e : log) CHECK(std::isfinite(e.loss));
  }
}

TEST_CASE("curriculum grows the cluster size in the log") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  TrainConfig c = toy_config();
  c.m1_epochs = 6;
  c.miner.cluster_size = 1;
  c.miner.curriculum = {true, 2, 4};
  const auto log = train_m1(d, enc, c).log;
  std::vector<std::size_t> sizes;
  for (const auto& e : log) sizes.push_back(e.cluster_size);
  CHECK(sizes == std::vector<std::size_t>{1, 1, 2, 2, 4, 4});
}

TEST_CASE("early stop on P@1") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  TrainConfig c = toy_config();
  c.stop_at_p1 = 0.5;
  const auto log = train_m1(d, enc, c).log;
  CHECK(log.size() < 50);
  CHECK(log.back().p_at_1 >= 0.5);
}

TEST_CASE("M2 with zero epochs keeps the label embeddings exactly") {
  const Dataset d = separable_toy();
  const BagOfEmbeddings enc(init_params(30, 8, 4));
  TrainConfig c = toy_config();
  c.m2_epochs = 0;
  const M2Result r = train_m2(d, enc, c);
  CHECK(r.bank.weights == enc.embed_batch(d.label_features()));
}

TEST_CASE("M2 keeps classifiers unit norm and the encoder untouched") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  TrainConfig c = toy_config();
  c.m1_epochs = 5;  // leave room for M2 to improve
  train_m1(d, enc, c);
  const Matrix frozen = enc.params().table;
  const double emb_p1 = embedding_p_at_1(d, enc, all_points(d));
  const M2Result r = train_m2(d, enc, c);
  CHECK(enc.params().table == frozen);
  for (std::size_t l = 0; l < r.bank.weights.rows(); ++l) {
    CHECK(std::abs(norm2(r.bank.weights.row(l)) - 1.0) <= 1e-6);
  }
  const auto pts = all_points(d);
  const double cls_p1 =
      p_at_1(d, enc.embed_rows(d.point_features(), pts), pts, r.bank.weights);
  CHECK(cls_p1 >= emb_p1);
}

TEST_CASE("classifier checkpoint and training log") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "xcm_cls_test.bin").string();
  ClassifierBank bank{Matrix(3, 2, 0.0)};
  bank.weights(0, 0) = 1.0;
  bank.weights(1, 1) = 1.0;
  bank.weights(2, 0) = 0.6;
  bank.weights(2, 1) = -0.8;
  save_classifiers(path, bank);
  const ClassifierBank back = load_classifiers(path);
  REQUIRE(back.weights.rows() == 3);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.weights.data()[i] ==
          doctest::Approx(bank.weights.data()[i]).epsilon(1e-7));
  }
  std::ofstream(path, std::ios::binary) << "XCMENC01garbage";
  CHECK_THROWS_AS(load_classifiers(path), FormatError);
  std::filesystem::remove(path);

  const auto log_path = (dir / "xcm_log_test.csv").string();
  write_train_log(log_path, {{0, 0.5, 0.25, 1.0, 0.5, 2, 3}});
  std::ifstream in(log_path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,loss,p_at_1,seconds");
  CHECK(row.rfind("0,0.5,0.25,", 0) == 0);
  std::filesystem::remove(log_path);
}

TEST_CASE("training rejects bad configurations") {
  const Dataset d = separable_toy();
  BagOfEmbeddings enc(init_params(30, 8, 1));
  TrainConfig c = toy_config();
  c.m1_learning_rate = 0.0;
  CHECK_THROWS_AS(train_m1(d, enc, c), ConfigError);
  c = toy_config();
  c.beta2 = 1.0;
  CHECK_THROWS_AS(train_m1(d, enc, c), ConfigError);

  std::vector<SparseVector> pts(2, SparseVector({{0, 1.0}}, 30));
  const Dataset empty = build_dataset(pts, {SparseVector({{0, 1.0}}, 30)},
                                      {{}, {}});
  CHECK_THROWS_AS(train_m1(empty, enc, toy_config()), ConfigError);
}
