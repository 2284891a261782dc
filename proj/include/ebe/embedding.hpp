#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ebe/error.hpp"

namespace ebe {

enum class Split { Train, Test };

inline const char* to_string(Split split) { return split == Split::Train ? "train" : "test"; }

using ClassId = std::int64_t;
using LayerId = std::int64_t;

/// Dense row-major single-precision matrix holding one layer's embeddings for
/// one data split.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t rows, std::size_t dims, std::vector<float> values,
                  LayerId source_layer = 0, Split split = Split::Train)
      : rows_(rows), dims_(dims), values_(std::move(values)),
        source_layer_(source_layer), split_(split) {
    if (rows_ == 0 || dims_ == 0) {
      throw ShapeError("embedding matrix must have at least one row and one column, got " +
                       std::to_string(rows_) + "x" + std::to_string(dims_));
    }
    if (values_.size() != rows_ * dims_) {
      throw ShapeError("embedding matrix payload has " + std::to_string(values_.size()) +
                       " values, expected " + std::to_string(rows_ * dims_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  LayerId source_layer() const noexcept { return source_layer_; }
  Split split() const noexcept { return split_; }

  std::span<const float> values() const noexcept { return values_; }
  std::span<float> values() noexcept { return values_; }

  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * dims_, dims_);
  }
  std::span<float> row(std::size_t i) noexcept {
    return std::span<float>(values_).subspan(i * dims_, dims_);
  }

  void set_source_layer(LayerId layer) noexcept { source_layer_ = layer; }
  void set_split(Split split) noexcept { split_ = split; }

  /// Throws DataError naming the first (row, col) holding NaN or Inf.
  void check_finite() const {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        const std::size_t r = i / dims_;
        const std::size_t c = i % dims_;
        throw DataError("non-finite value at row " + std::to_string(r) + ", column " +
                            std::to_string(c),
                        r, c);
      }
    }
  }

 private:
  std::size_t rows_;
  std::size_t dims_;
  std::vector<float> values_;
  LayerId source_layer_;
  Split split_;
};

/// Shape plus bitwise payload equality; NaN payloads compare by bit pattern.
inline bool bit_equal(const EmbeddingMatrix& a, const EmbeddingMatrix& b) noexcept {
  if (a.rows() != b.rows() || a.dims() != b.dims()) return false;
  return std::memcmp(a.values().data(), b.values().data(), a.values().size() * sizeof(float)) == 0;
}

/// Class ids paired with an embedding matrix; every label lies in [0, num_classes).
class LabelVector {
 public:
  LabelVector(std::vector<ClassId> labels, ClassId num_classes)
      : labels_(std::move(labels)), num_classes_(num_classes) {
    if (num_classes_ <= 0) throw ParamError("num_classes must be positive");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] < 0 || labels_[i] >= num_classes_) {
        throw DataError("label " + std::to_string(labels_[i]) + " at index " + std::to_string(i) +
                        " outside [0, " + std::to_string(num_classes_) + ")");
      }
    }
  }

  std::size_t size() const noexcept { return labels_.size(); }
  ClassId num_classes() const noexcept { return num_classes_; }
  ClassId operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::span<const ClassId> values() const noexcept { return labels_; }

  friend bool operator==(const LabelVector&, const LabelVector&) = default;

 private:
  std::vector<ClassId> labels_;
  ClassId num_classes_;
};

}  // namespace ebe
