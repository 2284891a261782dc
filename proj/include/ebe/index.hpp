#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"

namespace ebe {

namespace kernel {

inline constexpr std::size_t kLanes = 8;

// Every reduction goes through a fixed set of lanes (element j feeds lane
// j % kLanes) and the lanes are summed in a fixed order, so a given pair of
// vectors always produces the same bits no matter how callers tile the work.
template <typename A, typename B>
inline double dot(std::span<const A> a, std::span<const B> b) noexcept {
  std::array<double, kLanes> acc{};
  const std::size_t n = a.size();
  const std::size_t body = n - n % kLanes;
  for (std::size_t j = 0; j < body; j += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      acc[l] += static_cast<double>(a[j + l]) * static_cast<double>(b[j + l]);
    }
  }
  for (std::size_t j = body; j < n; ++j) {
    acc[j - body] += static_cast<double>(a[j]) * static_cast<double>(b[j]);
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <typename T>
inline double squared_norm(std::span<const T> a) noexcept {
  return dot<T, T>(a, a);
}

/// Writes a / ||a|| into `out`. Returns false (and writes zeros) when ||a|| == 0.
template <typename T>
inline bool unit(std::span<const T> a, std::span<double> out) noexcept {
  const double norm = std::sqrt(squared_norm<T>(a));
  if (norm == 0.0) {
    for (auto& v : out) v = 0.0;
    return false;
  }
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = static_cast<double>(a[j]) / norm;
  return true;
}

}  // namespace kernel

/// Distance metrics available for retrieval. Cosine is the only one.
enum class Metric { Cosine };

inline const char* to_string(Metric) { return "cosine"; }

/// Cosine distance 1 - a.b / (|a||b|), accumulated in double precision.
/// A zero vector has similarity 0 with everything, hence distance 1.
template <typename T>
double cosine_distance(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_distance: dimension mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  const double na = std::sqrt(kernel::squared_norm<T>(a));
  const double nb = std::sqrt(kernel::squared_norm<T>(b));
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double sim = kernel::dot<T, T>(a, b) / (na * nb);
  return std::clamp(1.0 - sim, 0.0, 2.0);
}

inline double cosine_distance(const std::vector<float>& a, const std::vector<float>& b) {
  return cosine_distance<float>(std::span<const float>(a), std::span<const float>(b));
}

/// Row-normalized copy of an embedding matrix plus its labels. Cosine
/// similarity against it reduces to a dot product. Immutable once built,
/// so one instance can serve any number of concurrent readers.
class NormalizedIndex {
 public:
  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  LayerId source_layer() const noexcept { return source_layer_; }
  const LabelVector& labels() const noexcept { return labels_; }
  /// Sorted indices of rows whose original L2 norm was exactly zero.
  std::span<const std::size_t> zero_rows() const noexcept { return zero_rows_; }
  std::span<const double> unit_rows() const noexcept { return unit_rows_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(unit_rows_).subspan(i * dims_, dims_);
  }

  /// Builds an index from rows that are already unit-length (or all-zero),
  /// e.g. a cached normalization. All-zero rows are recorded as zero rows.
  static NormalizedIndex from_unit_rows(std::vector<double> unit_rows, std::size_t rows,
                                        std::size_t dims, LabelVector labels, LayerId layer) {
    if (rows == 0 || dims == 0 || unit_rows.size() != rows * dims) {
      throw ShapeError("unit row payload does not match " + std::to_string(rows) + "x" +
                       std::to_string(dims));
    }
    if (labels.size() != rows) {
      throw ShapeError("index has " + std::to_string(rows) + " rows but " +
                       std::to_string(labels.size()) + " labels");
    }
    NormalizedIndex idx(rows, dims, std::move(labels), layer);
    idx.unit_rows_ = std::move(unit_rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto r = idx.row(i);
      if (std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; })) {
        idx.zero_rows_.push_back(i);
      }
    }
    return idx;
  }

  friend NormalizedIndex normalize(const EmbeddingMatrix& matrix, LabelVector labels);

 private:
  NormalizedIndex(std::size_t rows, std::size_t dims, LabelVector labels, LayerId layer)
      : rows_(rows), dims_(dims), labels_(std::move(labels)), source_layer_(layer) {}

  std::size_t rows_;
  std::size_t dims_;
  std::vector<double> unit_rows_;
  std::vector<std::size_t> zero_rows_;
  LabelVector labels_;
  LayerId source_layer_;
};

/// Scales every nonzero row to unit L2 norm (norm taken in double precision).
/// Zero rows stay zero and are listed in zero_rows().
inline NormalizedIndex normalize(const EmbeddingMatrix& matrix, LabelVector labels) {
  if (labels.size() != matrix.rows()) {
    throw ShapeError("matrix has " + std::to_string(matrix.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  NormalizedIndex idx(matrix.rows(), matrix.dims(), std::move(labels), matrix.source_layer());
  idx.unit_rows_.resize(matrix.rows() * matrix.dims());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    auto out = std::span<double>(idx.unit_rows_).subspan(i * matrix.dims(), matrix.dims());
    if (!kernel::unit<float>(matrix.row(i), out)) idx.zero_rows_.push_back(i);
  }
  return idx;
}

/// Normalized query rows, each tagged with the test-split row it came from.
class QueryBatch {
 public:
  QueryBatch(const EmbeddingMatrix& test, std::vector<std::size_t> query_ids)
      : dims_(test.dims()), query_ids_(std::move(query_ids)) {
    queries_.resize(query_ids_.size() * dims_);
    zero_.resize(query_ids_.size(), false);
    for (std::size_t q = 0; q < query_ids_.size(); ++q) {
      const std::size_t id = query_ids_[q];
      if (id >= test.rows()) {
        throw ParamError("query id " + std::to_string(id) + " out of range (test split has " +
                         std::to_string(test.rows()) + " rows)");
      }
      auto out = std::span<double>(queries_).subspan(q * dims_, dims_);
      zero_[q] = !kernel::unit<float>(test.row(id), out);
    }
  }

  /// All rows of `test`, in order.
  explicit QueryBatch(const EmbeddingMatrix& test) : QueryBatch(test, iota(test.rows())) {}

  std::size_t size() const noexcept { return query_ids_.size(); }
  std::size_t dims() const noexcept { return dims_; }
  std::span<const std::size_t> query_ids() const noexcept { return query_ids_; }
  std::span<const double> query(std::size_t q) const noexcept {
    return std::span<const double>(queries_).subspan(q * dims_, dims_);
  }
  bool is_zero(std::size_t q) const noexcept { return zero_[q]; }

 private:
  static std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
  }

  std::size_t dims_;
  std::vector<std::size_t> query_ids_;
  std::vector<double> queries_;
  std::vector<bool> zero_;
};

}  // namespace ebe
