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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xcm {

// Error taxonomy. Every failure raised by the library derives from Error so
// the CLI can map it onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (header/row mismatch, unparsable token).
class FormatError : public Error {
 public:
  using Error::Error;
};

// An id outside the range declared by a header or a container.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Non-finite value in input data.
class ValueError : public Error {
 public:
  using Error::Error;
};

// Inconsistent or out-of-domain configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input for which the requested quantity is undefined (empty vector, zero
// norm, zero positive pairs, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

// Non-finite gradient or parameter during optimization.
class NumericsError : public Error {
 public:
  using Error::Error;
};

// Vector handed to an index that is not unit-norm.
class NormError : public Error {
 public:
  using Error::Error;
};

using LabelId = std::uint32_t;
using PointId = std::uint32_t;

// Dense row-major matrix of doubles. Rows are handed out as spans.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Four independent partial sums; the summation order is fixed, so results
// are reproducible across runs and thread counts.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size(), n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (std::size_t i = n4; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Euclidean distance between two unit vectors from their dot product. The
// radicand is clamped so rounding never produces a NaN. Every radius test in
// the library goes through this one function so that retrieval and
// verification agree bit-for-bit.
inline double unit_distance(double dot_product) {
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * dot_product));
}

inline double unit_distance(std::span<const double> a,
                            std::span<const double> b) {
  return unit_distance(dot(a, b));
}

// Normalizes in place; returns the pre-normalization norm.
inline double normalize(std::span<double> v) {
  const double n = norm2(v);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return n;
}

// Deterministic seed derivation (splitmix64 finalizer). Lets every consumer of
// randomness branch off a single master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

// Cheap-to-construct engine for call sites that draw only a few numbers.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return UINT64_MAX; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Uniform integer in [0, n). std::uniform_int_distribution is not specified
// bit-for-bit across standard libraries, so draws go through this helper to
// keep seeded runs reproducible everywhere.
template <typename Engine>
std::size_t uniform_index(Engine& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

// Uniform double in [0, 1).
inline double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(rng, i)]);
  }
}

// Worker count used by parallel_for. Defaults to 1 for reproducible runs.
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs body(i) for i in [0, n), split into contiguous chunks across
// num_threads() workers. Bodies must only write to per-index state.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Verbosity comes from the NGAME_LOG environment variable
// (error|warn|info|debug or 0-3). Default: warn.
LogLevel log_level();
void log(LogLevel level, const std::string& message);

}  // namespace xcm
