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


#include <algorithm>
#include <filesystem>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oracles.h"
#include "xcmine/ann.h"

using namespace xcm;

namespace {

// Full argsort by (score desc, id asc) with plain loops for the scores.
std::vector<ScoredId> argsort_top(const Matrix& v, std::span<const double> q,
                                  std::size_t k) {
  std::vector<ScoredId> all;
  for (std::uint32_t i = 0; i < v.rows(); ++i) {
    all.push_back({i, dot(v.row(i), q)});
  }
  std::sort(all.begin(), all.end(), [](const ScoredId& a, const ScoredId& b) {
    return a.score > b.score || (a.score == b.score && a.id < b.id);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace

TEST_CASE("two orthogonal vectors") {
  Matrix v(2, 2, 0.0);
  v(0, 0) = 1.0;
  v(1, 1) = 1.0;
  const MipsIndex index(v);
  CHECK(index.size() == 2);
  const std::vector<double> q{1.0, 0.0};
  const auto top = index.query(q, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].id == 0);
  CHECK(top[0].score == 1.0);
  CHECK(index.query(q, 10).size() == 2);
}

TEST_CASE("ties go to the lower id, duplicates are both retrievable") {
  Matrix v(3, 2, 0.0);
  v(0, 1) = 1.0;
  v(1, 0) = 1.0;
  v(2, 0) = 1.0;
  const MipsIndex index(v);
  const double s = 1 / std::sqrt(2.0);
  const std::vector<double> q{s, s};
  const auto top = index.query(q, 3);
  CHECK(top[0].id == 0);
  CHECK(top[1].id == 1);
  CHECK(top[2].id == 2);
  const std::vector<double> e0{1.0, 0.0};
  const auto dup = index.query(e0, 2);
  CHECK(dup[0].id == 1);
  CHECK(dup[1].id == 2);
}

TEST_CASE("non-unit vectors are rejected") {
  Matrix v(1, 2, 0.0);
  v(0, 0) = 1.1;
  CHECK_THROWS_AS(MipsIndex{v}, NormError);
  IndexOptions o;
  o.mode = IndexMode::kApproximate;
  CHECK_THROWS_AS((MipsIndex{v, o}), NormError);
}

TEST_CASE("exact queries equal a full argsort") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 300);
    const std::size_t dim = 2 + uniform_index(rng, 10);
    const std::size_t k = 1 + uniform_index(rng, 20);
    const Matrix v = oracle::random_unit_rows(n, dim, rng);
    const Matrix q = oracle::random_unit_rows(1, dim, rng);
    const MipsIndex index(v);
    const auto got = index.query(q.row(0), k);
    CHECK(got == argsort_top(v, q.row(0), k));
    for (std::size_t j = 1; j < got.size(); ++j) {
      CHECK(got[j - 1].score >= got[j].score);
    }
  }
}

TEST_CASE("exact queries do not depend on build order") {
  Rng rng(2);
  const Matrix v = oracle::random_unit_rows(50, 4, rng);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Matrix w(50, 4);
  for (std::size_t i = 0; i < 50; ++i) {
    std::copy(v.row(perm[i]).begin(), v.row(perm[i]).end(), w.row(i).begin());
  }
  const MipsIndex a(v), b(w);
  const Matrix q = oracle::random_unit_rows(20, 4, rng);
  for (std::size_t r = 0; r < 20; ++r) {
    const auto ra = a.query(q.row(r), 10), rb = b.query(q.row(r), 10);
    for (std::size_t j = 0; j < 10; ++j) {
      CHECK(perm[rb[j].id] == ra[j].id);
    }
  }
}

TEST_CASE("approximate index recall on 1000 random unit vectors") {
  Rng rng(3);
  const Matrix v = oracle::random_unit_rows(1000, 16, rng);
  const Matrix q = oracle::random_unit_rows(200, 16, rng);
  IndexOptions o;
  o.mode = IndexMode::kApproximate;
  o.seed = 4;
  const MipsIndex approx(v, o), exact(v);
  CHECK(approx.mode() == IndexMode::kApproximate);
  CHECK(recall_at_k(approx, exact, q, 10) >= 0.95);
  // Results are unique and sorted.
  const auto top = approx.query(q.row(0), 10);
  std::set<std::uint32_t> ids;
  for (const auto& s : top) ids.insert(s.id);
  CHECK(ids.size() == 10);
  CHECK(std::is_sorted(top.begin(), top.end(), ranks_before));
}

TEST_CASE("graph respects the degree bound and is reproducible") {
  Rng rng(5);
  const Matrix v = oracle::random_unit_rows(300, 8, rng);
  IndexOptions o;
  o.mode = IndexMode::kApproximate;
  o.degree = 10;
  o.seed = 1;
  const MipsIndex a(v, o), b(v, o);
  CHECK(a.graph() == b.graph());
  for (const auto& nbrs : a.graph()) CHECK(nbrs.size() <= 20);
  CHECK(MipsIndex(v).graph().empty());
}

TEST_CASE("auto mode switches at 50k vectors") {
  CHECK(IndexOptions::Auto(49999).mode == IndexMode::kExact);
  CHECK(IndexOptions::Auto(50000).mode == IndexMode::kApproximate);
}

TEST_CASE("index dump uses the classifier layout") {
  Matrix v(2, 3, 0.0);
  v(0, 0) = 1.0;
  v(1, 2) = 1.0;
  const auto path =
      (std::filesystem::temp_directory_path() / "xcm_idx_test.bin").string();
  save_index_vectors(path, MipsIndex(v));
  CHECK(std::filesystem::file_size(path) == 8 + 4 + 8 + 8 + 6 * 4);
  std::filesystem::remove(path);
}
