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

#include "xcmine/dataset.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>

namespace xcm {
namespace {

std::string where(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

template <typename T>
T parse_uint(std::string_view tok, std::size_t line_no) {
  T v{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw FormatError(where(line_no) + "bad integer '" + std::string(tok) +
                      "'");
  }
  return v;
}

double parse_double(std::string_view tok, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range) {
    throw ValueError(where(line_no) + "value out of range '" +
                     std::string(tok) + "'");
  }
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw FormatError(where(line_no) + "bad value '" + std::string(tok) + "'");
  }
  if (!std::isfinite(v)) {
    throw ValueError(where(line_no) + "non-finite value '" + std::string(tok) +
                     "'");
  }
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

SparseVector::SparseVector(std::vector<SparseEntry> entries,
                           std::size_t dimensionality)
    : entries_(std::move(entries)), dim_(dimensionality) {
  std::sort(entries_.begin(), entries_.end(),
            [](const SparseEntry& a, const SparseEntry& b) {
              return a.feature < b.feature;
            });
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].feature >= dim_) {
      throw RangeError("feature id " + std::to_string(entries_[k].feature) +
                       " >= dimensionality " + std::to_string(dim_));
    }
    if (!std::isfinite(entries_[k].value)) {
      throw ValueError("non-finite value for feature " +
                       std::to_string(entries_[k].feature));
    }
    if (k > 0 && entries_[k].feature == entries_[k - 1].feature) {
      throw FormatError("duplicate feature id " +
                        std::to_string(entries_[k].feature));
    }
  }
}

SparseFile parse_sparse(std::istream& in) {
  SparseFile file;
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError("missing header line");
  strip_cr(line);
  const auto header = split_ws(line);
  if (header.size() != 3) {
    throw FormatError(where(line_no) +
                      "header must be 'num_rows num_features num_labels'");
  }
  const auto num_rows = parse_uint<std::size_t>(header[0], line_no);
  file.num_features = parse_uint<std::size_t>(header[1], line_no);
  file.num_labels = parse_uint<std::size_t>(header[2], line_no);
  file.rows.reserve(num_rows);
  file.labels.reserve(num_rows);

  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (file.rows.size() == num_rows) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      throw FormatError(where(line_no) + "more rows than the header's " +
                        std::to_string(num_rows));
    }
    auto tokens = split_ws(line);
    std::vector<LabelId> labels;
    std::size_t first_feature = 0;
    const bool leading_space =
        !line.empty() && (line[0] == ' ' || line[0] == '\t');
    if (!tokens.empty() && !leading_space &&
        tokens[0].find(':') == std::string_view::npos) {
      std::string_view lt = tokens[0];
      std::size_t pos = 0;
      while (pos <= lt.size()) {
        std::size_t comma = lt.find(',', pos);
        if (comma == std::string_view::npos) comma = lt.size();
        const auto id = parse_uint<std::uint64_t>(lt.substr(pos, comma - pos),
                                                  line_no);
        if (id >= file.num_labels) {
          throw RangeError(where(line_no) + "label id " + std::to_string(id) +
                           " >= num_labels " +
                           std::to_string(file.num_labels));
        }
        labels.push_back(static_cast<LabelId>(id));
        pos = comma + 1;
      }
      first_feature = 1;
    }
    std::vector<SparseEntry> entries;
    entries.reserve(tokens.size() - first_feature);
    for (std::size_t t = first_feature; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) {
        throw FormatError(where(line_no) + "expected feature:value, got '" +
                          std::string(tokens[t]) + "'");
      }
      const auto id =
          parse_uint<std::uint64_t>(tokens[t].substr(0, colon), line_no);
      if (id >= file.num_features) {
        throw RangeError(where(line_no) + "feature id " + std::to_string(id) +
                         " >= num_features " +
                         std::to_string(file.num_features));
      }
      entries.push_back({static_cast<std::uint32_t>(id),
                         parse_double(tokens[t].substr(colon + 1), line_no)});
    }
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
      throw FormatError(where(line_no) + "duplicate label id");
    }
    try {
      file.rows.emplace_back(std::move(entries), file.num_features);
    } catch (const Error& e) {
      throw FormatError(where(line_no) + e.what());
    }
    file.labels.push_back(std::move(labels));
  }
  if (file.rows.size() != num_rows) {
    throw FormatError("header declares " + std::to_string(num_rows) +
                      " rows, found " + std::to_string(file.rows.size()));
  }
  return file;
}

SparseFile parse_sparse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return parse_sparse(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const RangeError& e) {
    throw RangeError(path + ": " + e.what());
  } catch (const ValueError& e) {
    throw ValueError(path + ": " + e.what());
  }
}

void write_sparse(std::ostream& out, const SparseFile& file) {
  out << file.rows.size() << ' ' << file.num_features << ' '
      << file.num_labels << '\n';
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& labels = r < file.labels.size() ? file.labels[r]
                                                : std::vector<LabelId>{};
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (k > 0) out << ',';
      out << labels[k];
    }
    for (const auto& e : file.rows[r].entries()) {
      out << ' ' << e.feature << ':' << format_double(e.value);
    }
    out << '\n';
  }
}

void write_sparse_file(const std::string& path, const SparseFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  write_sparse(out, file);
}

bool Dataset::is_positive(PointId i, LabelId l) const {
  const auto& row = point_labels_[i];
  return std::binary_search(row.begin(), row.end(), l);
}

std::vector<PointId> Dataset::eligible_points() const {
  std::vector<PointId> out;
  for (PointId i = 0; i < point_labels_.size(); ++i) {
    if (!point_labels_[i].empty()) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Dataset::label_frequencies() const {
  std::vector<std::size_t> f(label_points_.size());
  for (std::size_t l = 0; l < f.size(); ++l) f[l] = label_points_[l].size();
  return f;
}

Dataset build_dataset(std::vector<SparseVector> points,
                      std::vector<SparseVector> labels,
                      std::vector<std::vector<LabelId>> relevance) {
  if (points.empty() || labels.empty()) {
    throw ConfigError("dataset needs N > 0 points and L > 0 labels");
  }
  if (relevance.size() != points.size()) {
    throw RangeError("relevance has " + std::to_string(relevance.size()) +
                     " rows for " + std::to_string(points.size()) + " points");
  }
  const std::size_t V = points.front().dimensionality();
  for (const auto& v : points) {
    if (v.dimensionality() != V) {
      throw FormatError("point features disagree on dimensionality");
    }
  }
  for (const auto& v : labels) {
    if (v.dimensionality() != V) {
      throw FormatError(
          "label features must share the point-feature vocabulary");
    }
  }
  Dataset d;
  d.num_features_ = V;
  d.label_points_.resize(labels.size());
  for (PointId i = 0; i < relevance.size(); ++i) {
    auto& row = relevance[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (LabelId l : row) {
      if (l >= labels.size()) {
        throw RangeError("point " + std::to_string(i) + " references label " +
                         std::to_string(l) + " >= L=" +
                         std::to_string(labels.size()));
      }
      d.label_points_[l].push_back(i);  // ascending since i ascends
    }
  }
  d.points_ = std::move(points);
  d.label_features_ = std::move(labels);
  d.point_labels_ = std::move(relevance);
  return d;
}

Dataset load_dataset(const std::string& point_path,
                     const std::string& label_feature_path) {
  SparseFile pts = parse_sparse_file(point_path);
  SparseFile lbl = parse_sparse_file(label_feature_path);
  if (lbl.rows.size() != pts.num_labels) {
    throw FormatError(label_feature_path + ": " +
                      std::to_string(lbl.rows.size()) +
                      " label rows but the point file declares " +
                      std::to_string(pts.num_labels) + " labels");
  }
  if (lbl.num_features != pts.num_features) {
    throw FormatError(label_feature_path +
                      ": label features must share the point vocabulary (" +
                      std::to_string(pts.num_features) + " features)");
  }
  return build_dataset(std::move(pts.rows), std::move(lbl.rows),
                       std::move(pts.labels));
}

SparseFile point_file(const Dataset& d) {
  return {d.num_features(), d.num_labels(), d.point_features(),
          d.point_labels()};
}

SparseFile label_feature_file(const Dataset& d) {
  return {d.num_features(), d.num_labels(), d.label_features(),
          std::vector<std::vector<LabelId>>(d.num_labels())};
}

DatasetStats compute_stats(const Dataset& d) {
  DatasetStats s;
  const std::size_t N = d.num_points();
  const std::size_t L = d.num_labels();
  s.num_points = N;
  s.num_labels = L;
  s.p.resize(N);
  s.q.resize(L);
  for (std::size_t i = 0; i < N; ++i) s.p[i] = d.positives(i).size();
  for (std::size_t l = 0; l < L; ++l) s.q[l] = d.label_points()[l].size();
  for (auto v : s.p) s.total_positives += v;
  s.p_bar = static_cast<double>(s.total_positives) / static_cast<double>(N);
  s.q_bar = static_cast<double>(s.total_positives) / static_cast<double>(L);
  s.p_min = *std::min_element(s.p.begin(), s.p.end());
  s.q_min = *std::min_element(s.q.begin(), s.q.end());

  double var_p = 0.0;
  for (auto v : s.p) {
    const double dv = static_cast<double>(v) - s.p_bar;
    var_p += dv * dv;
  }
  s.sigma2_sq = var_p / static_cast<double>(N);

  s.bound_usable = s.q_min >= 1;
  if (!s.bound_usable) {
    s.mu1 = std::numeric_limits<double>::quiet_NaN();
    s.sigma1_sq = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::vector<double> ratio(L);
  double sum = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const double q = static_cast<double>(s.q[l]);
    ratio[l] = (static_cast<double>(N) - q) / q;
    sum += ratio[l];
  }
  s.mu1 = sum / static_cast<double>(L);
  double var = 0.0;
  for (double r : ratio) var += (r - s.mu1) * (r - s.mu1);
  s.sigma1_sq = var / static_cast<double>(L);
  return s;
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream os;
  os.precision(17);
  os << "num_points = " << s.num_points << '\n'
     << "num_labels = " << s.num_labels << '\n'
     << "total_positives = " << s.total_positives << '\n'
     << "p_bar = " << s.p_bar << '\n'
     << "q_bar = " << s.q_bar << '\n'
     << "p_min = " << s.p_min << '\n'
     << "q_min = " << s.q_min << '\n'
     << "mu1 = " << s.mu1 << '\n'
     << "sigma1_sq = " << s.sigma1_sq << '\n'
     << "sigma2_sq = " << s.sigma2_sq << '\n'
     << "bound_usable = " << (s.bound_usable ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace xcm
