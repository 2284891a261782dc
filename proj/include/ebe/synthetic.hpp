#pragma once

// Seeded Gaussian-cluster embeddings that stand in for real network
// activations, plus a writer that lays them out as a complete dataset
// (tensor files, label files, manifest).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"
#include "ebe/index.hpp"
#include "ebe/manifest.hpp"
#include "ebe/npy.hpp"

namespace ebe {

struct SyntheticSpec {
  std::size_t num_classes = 3;
  std::size_t per_class_count = 100;  // per split
  std::size_t dims = 16;
  double cluster_spread = 0.1;
  std::uint64_t seed = 42;
};

struct SyntheticData {
  EmbeddingMatrix train;
  LabelVector train_labels;
  EmbeddingMatrix test;
  LabelVector test_labels;
};

/// Standard normal variates from mt19937_64 via Box-Muller. The engine is
/// fully specified by the standard; the transform is spelled out here so the
/// stream is identical across standard library implementations.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Row i of each split belongs to class i % num_classes. Class means are unit
/// vectors; each sample is mean + spread * N(0, I). Train rows are drawn
/// before test rows from the same stream, so the splits never share a sample.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes == 0 || spec.per_class_count == 0 || spec.dims == 0) {
    throw ParamError("synthetic spec counts must be positive");
  }
  if (!(spec.cluster_spread >= 0.0) || !std::isfinite(spec.cluster_spread)) {
    throw ParamError("cluster_spread must be a finite non-negative number");
  }
  GaussianStream rng(spec.seed);
  std::vector<double> means(spec.num_classes * spec.dims);
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    std::span<double> mean(means.data() + c * spec.dims, spec.dims);
    double norm = 0.0;
    while (norm == 0.0) {
      for (auto& v : mean) v = rng.next();
      norm = std::sqrt(kernel::squared_norm<double>(mean));
    }
    for (auto& v : mean) v /= norm;
  }

  const std::size_t rows = spec.num_classes * spec.per_class_count;
  auto draw = [&](Split split) {
    std::vector<float> values(rows * spec.dims);
    std::vector<ClassId> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t c = i % spec.num_classes;
      labels[i] = static_cast<ClassId>(c);
      for (std::size_t j = 0; j < spec.dims; ++j) {
        values[i * spec.dims + j] =
            static_cast<float>(means[c * spec.dims + j] + spec.cluster_spread * rng.next());
      }
    }
    return std::pair{EmbeddingMatrix(rows, spec.dims, std::move(values), 0, split),
                     LabelVector(std::move(labels), static_cast<ClassId>(spec.num_classes))};
  };
  auto [train, train_labels] = draw(Split::Train);
  auto [test, test_labels] = draw(Split::Test);
  return {std::move(train), std::move(train_labels), std::move(test), std::move(test_labels)};
}

struct SyntheticLayer {
  LayerId layer_id = 1;
  std::size_t dims = 16;
  double cluster_spread = 0.1;
  std::uint64_t seed = 42;
};

/// Writes one synthetic dataset with several layers into `dir` and returns
/// the path of its manifest. All layers share class counts, so labels align.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir,
                                                     const std::string& name,
                                                     std::size_t num_classes,
                                                     std::size_t per_class_count,
                                                     const std::vector<SyntheticLayer>& layers,
                                                     std::optional<double> baseline = std::nullopt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  DatasetManifest m;
  m.dataset_name = name;
  m.num_classes = static_cast<ClassId>(num_classes);
  m.baseline_accuracy = baseline;
  m.train_labels_path = "train_labels.npy";
  m.test_labels_path = "test_labels.npy";
  bool labels_written = false;
  for (const auto& layer : layers) {
    const auto data = generate_synthetic(
        {num_classes, per_class_count, layer.dims, layer.cluster_spread, layer.seed});
    const std::string stem = "layer" + std::to_string(layer.layer_id);
    npy::write_matrix(data.train, dir / (stem + "_train.npy"));
    npy::write_matrix(data.test, dir / (stem + "_test.npy"));
    if (!labels_written) {
      npy::write_labels(data.train_labels.values(), dir / m.train_labels_path);
      npy::write_labels(data.test_labels.values(), dir / m.test_labels_path);
      labels_written = true;
    }
    m.layers.push_back({layer.layer_id, stem + "_train.npy", stem + "_test.npy", layer.dims});
  }
  const auto path = dir / "manifest.json";
  write_manifest(m, path);
  return path;
}

}  // namespace ebe
