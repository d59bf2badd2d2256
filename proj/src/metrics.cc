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

#include "xcmine/metrics.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace xcm {
namespace {

bool contains(std::span<const LabelId> sorted, LabelId l) {
  return std::binary_search(sorted.begin(), sorted.end(), l);
}

double discount(std::size_t rank) {  // rank is 0-based
  return 1.0 / std::log2(static_cast<double>(rank) + 2.0);
}

std::size_t hits_at_k(std::span<const LabelId> ranked,
                      std::span<const LabelId> relevant, std::size_t k) {
  std::size_t hits = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t j = 0; j < n; ++j) hits += contains(relevant, ranked[j]);
  return hits;
}

void require_k(std::size_t k) {
  if (k == 0) throw ConfigError("k must be >= 1");
}

// Descending weights of the relevant labels.
std::vector<double> sorted_weights(std::span<const LabelId> relevant,
                                   const PropensityModel& pm) {
  std::vector<double> w;
  w.reserve(relevant.size());
  for (LabelId l : relevant) w.push_back(pm.weight(l));
  std::sort(w.begin(), w.end(), std::greater<>());
  return w;
}

}  // namespace

double precision_at_k(std::span<const LabelId> ranked,
                      std::span<const LabelId> relevant, std::size_t k) {
  require_k(k);
  return static_cast<double>(hits_at_k(ranked, relevant, k)) /
         static_cast<double>(k);
}

double ndcg_at_k(std::span<const LabelId> ranked,
                 std::span<const LabelId> relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (contains(relevant, ranked[j])) dcg += discount(j);
  }
  double ideal = 0.0;
  for (std::size_t j = 0; j < std::min(k, relevant.size()); ++j) {
    ideal += discount(j);
  }
  return dcg / ideal;
}

double recall_at_k(std::span<const LabelId> ranked,
                   std::span<const LabelId> relevant, std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  return static_cast<double>(hits_at_k(ranked, relevant, k)) /
         static_cast<double>(relevant.size());
}

PropensityModel propensities(std::span<const std::size_t> label_freq,
                             std::size_t num_points, double a, double b) {
  if (num_points < 3) {
    throw ConfigError("propensity model needs N >= 3 (log N - 1 > 0)");
  }
  if (!(a > 0.0 && a < 1.0)) throw ConfigError("propensity A must be in (0,1)");
  if (!(b >= 0.0)) throw ConfigError("propensity B must be >= 0");
  PropensityModel pm;
  pm.a = a;
  pm.b = b;
  const double c =
      (std::log(static_cast<double>(num_points)) - 1.0) * std::pow(b + 1.0, a);
  pm.propensity.reserve(label_freq.size());
  for (std::size_t f : label_freq) {
    pm.propensity.push_back(
        1.0 / (1.0 + c * std::pow(static_cast<double>(f) + b, -a)));
  }
  return pm;
}

double psp_at_k(std::span<const LabelId> ranked,
                std::span<const LabelId> relevant, const PropensityModel& pm,
                std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  double score = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (contains(relevant, ranked[j])) score += pm.weight(ranked[j]);
  }
  const auto w = sorted_weights(relevant, pm);
  double best = 0.0;
  for (std::size_t j = 0; j < std::min(k, w.size()); ++j) best += w[j];
  return score / best;
}

double psn_at_k(std::span<const LabelId> ranked,
                std::span<const LabelId> relevant, const PropensityModel& pm,
                std::size_t k) {
  require_k(k);
  if (relevant.empty()) return 0.0;
  double score = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t j = 0; j < n; ++j) {
    if (contains(relevant, ranked[j])) {
      score += pm.weight(ranked[j]) * discount(j);
    }
  }
  const auto w = sorted_weights(relevant, pm);
  double best = 0.0;
  for (std::size_t j = 0; j < std::min(k, w.size()); ++j) {
    best += w[j] * discount(j);
  }
  return score / best;
}

EvaluationReport evaluate(const std::vector<std::vector<LabelId>>& ranked,
                          const std::vector<std::vector<LabelId>>& truth,
                          const PropensityModel* propensity,
                          std::span<const std::size_t> ks,
                          bool keep_per_point) {
  if (ranked.size() != truth.size()) {
    throw ConfigError("predictions cover " + std::to_string(ranked.size()) +
                      " points, ground truth " + std::to_string(truth.size()));
  }
  EvaluationReport r;
  r.ks.assign(ks.begin(), ks.end());
  if (propensity) {
    r.propensity_a = propensity->a;
    r.propensity_b = propensity->b;
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i].empty()) {
      ++r.num_skipped;
      continue;
    }
    PointMetrics pmx;
    pmx.point = i;
    for (std::size_t k : ks) {
      const std::string s = std::to_string(k);
      pmx.values["P@" + s] = precision_at_k(ranked[i], truth[i], k);
      pmx.values["N@" + s] = ndcg_at_k(ranked[i], truth[i], k);
      pmx.values["R@" + s] = recall_at_k(ranked[i], truth[i], k);
      if (propensity) {
        pmx.values["PSP@" + s] = psp_at_k(ranked[i], truth[i], *propensity, k);
        pmx.values["PSN@" + s] = psn_at_k(ranked[i], truth[i], *propensity, k);
      }
    }
    for (const auto& [name, v] : pmx.values) r.mean[name] += v;
    ++r.num_evaluated;
    if (keep_per_point) r.per_point.push_back(std::move(pmx));
  }
  if (r.num_evaluated > 0) {
    for (auto& [name, v] : r.mean) v /= static_cast<double>(r.num_evaluated);
  }
  return r;
}

std::string format_report(const EvaluationReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "num_evaluated = " << r.num_evaluated << '\n'
     << "num_skipped_empty_truth = " << r.num_skipped << '\n';
  if (r.mean.count("PSP@" + std::to_string(r.ks.empty() ? 1 : r.ks[0]))) {
    os << "propensity_a = " << r.propensity_a << '\n'
       << "propensity_b = " << r.propensity_b << '\n';
  }
  for (const char* family : {"P@", "N@", "R@", "PSP@", "PSN@"}) {
    for (std::size_t k : r.ks) {
      const auto it = r.mean.find(family + std::to_string(k));
      if (it != r.mean.end()) os << it->first << " = " << it->second << '\n';
    }
  }
  return os.str();
}

void write_per_point_csv(const std::string& path, const EvaluationReport& r) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  if (r.per_point.empty()) {
    out << "point\n";
    return;
  }
  out << "point";
  for (const auto& [name, v] : r.per_point.front().values) out << ',' << name;
  out << '\n';
  out.precision(10);
  for (const auto& p : r.per_point) {
    out << p.point;
    for (const auto& [name, v] : p.values) out << ',' << v;
    out << '\n';
  }
}

}  // namespace xcm
