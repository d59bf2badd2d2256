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

// Ranking metrics for extreme classification.
//
// All per-point metrics take a duplicate-free ranked prediction list and a
// sorted ground-truth set. Predictions shorter than k count the missing
// slots as misses.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "xcmine/common.h"

namespace xcm {

double precision_at_k(std::span<const LabelId> ranked,
                      std::span<const LabelId> relevant, std::size_t k);

// Binary-gain nDCG; 0 for empty ground truth.
double ndcg_at_k(std::span<const LabelId> ranked,
                 std::span<const LabelId> relevant, std::size_t k);

// 0 for empty ground truth.
double recall_at_k(std::span<const LabelId> ranked,
                   std::span<const LabelId> relevant, std::size_t k);

// Inverse-propensity model p_l = 1 / (1 + C (f_l + B)^-A) with
// C = (ln N - 1)(B + 1)^A.
struct PropensityModel {
  double a = 0.55;
  double b = 1.5;
  std::vector<double> propensity;  // per label, in (0, 1]

  double weight(LabelId l) const { return 1.0 / propensity[l]; }
};

// Throws ConfigError if N < 3, A outside (0, 1) or B < 0.
PropensityModel propensities(std::span<const std::size_t> label_freq,
                             std::size_t num_points, double a = 0.55,
                             double b = 1.5);

// Propensity-weighted P@k / nDCG@k, normalized per point by the best
// achievable weighted score so the result lies in [0, 1].
double psp_at_k(std::span<const LabelId> ranked,
                std::span<const LabelId> relevant, const PropensityModel& pm,
                std::size_t k);
double psn_at_k(std::span<const LabelId> ranked,
                std::span<const LabelId> relevant, const PropensityModel& pm,
                std::size_t k);

struct PointMetrics {
  std::size_t point = 0;
  std::map<std::string, double> values;  // "P@1" -> value, ...
};

struct EvaluationReport {
  std::vector<std::size_t> ks;
  std::map<std::string, double> mean;  // over points with non-empty truth
  std::size_t num_evaluated = 0;
  std::size_t num_skipped = 0;  // empty ground truth
  std::vector<PointMetrics> per_point;
  double propensity_a = 0.55;
  double propensity_b = 1.5;
};

// Metric names: P@k, N@k, R@k, PSP@k, PSN@k for each k. propensity may be
// null, in which case PSP/PSN are omitted.
EvaluationReport evaluate(const std::vector<std::vector<LabelId>>& ranked,
                          const std::vector<std::vector<LabelId>>& truth,
                          const PropensityModel* propensity,
                          std::span<const std::size_t> ks,
                          bool keep_per_point = false);

std::string format_report(const EvaluationReport& r);
void write_per_point_csv(const std::string& path, const EvaluationReport& r);

}  // namespace xcm
