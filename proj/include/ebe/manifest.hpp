#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"
#include "ebe/index.hpp"
#include "ebe/npy.hpp"

namespace ebe {

namespace fs = std::filesystem;

struct LayerEntry {
  LayerId layer_id = 0;
  std::string train_path;
  std::string test_path;
  std::size_t dims = 0;
};

/// Declarative index of a dataset: per-layer embedding files for both splits,
/// label files, and the underlying network's test accuracy when known.
/// Relative paths are resolved against `base_dir` (the manifest's directory).
struct DatasetManifest {
  std::string dataset_name;
  ClassId num_classes = 0;
  std::optional<double> baseline_accuracy;
  std::vector<LayerEntry> layers;
  std::string train_labels_path;
  std::string test_labels_path;
  std::optional<std::string> image_dir;

  fs::path base_dir;
  std::size_t train_rows = 0;  // filled in by validation
  std::size_t test_rows = 0;

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  const LayerEntry* find_layer(LayerId id) const {
    auto it = std::find_if(layers.begin(), layers.end(),
                           [id](const LayerEntry& e) { return e.layer_id == id; });
    return it == layers.end() ? nullptr : &*it;
  }

  const LayerEntry& layer(LayerId id) const {
    const LayerEntry* e = find_layer(id);
    if (e == nullptr) {
      throw ManifestError("layer_id " + std::to_string(id) + " not present in manifest", "", id);
    }
    return *e;
  }

  /// Deepest layer ordinal.
  LayerId max_layer() const { return layers.empty() ? 0 : layers.back().layer_id; }
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                       const std::string& where, const std::string& path) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ManifestError(path + ": unknown key '" + key + "' in " + where, path);
    }
  }
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, const std::string& where,
           const std::string& path) {
  if (!obj.contains(key)) {
    throw ManifestError(path + ": missing key '" + key + "' in " + where, path);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ManifestError(path + ": key '" + key + "' in " + where + " has the wrong type", path);
  }
}

inline void require_file(const fs::path& p, std::optional<LayerId> layer = std::nullopt) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw ManifestError("referenced file does not exist: " + p.string(), p.string(), layer);
  }
}

inline npy::Header matrix_header(const fs::path& p, LayerId layer) {
  require_file(p, layer);
  npy::Header h;
  try {
    h = npy::read_header(p);
  } catch (const Error& e) {
    throw ManifestError("layer " + std::to_string(layer) + ": " + e.what(), p.string(), layer);
  }
  if (h.descr != "<f4" || h.shape.size() != 2) {
    throw ManifestError("layer " + std::to_string(layer) + ": " + p.string() +
                            " is not a 2-D '<f4' matrix",
                        p.string(), layer);
  }
  return h;
}

}  // namespace detail

/// Checks every manifest invariant, including shapes recorded in the
/// referenced files' headers and label ranges. Fills train_rows/test_rows.
inline void validate(DatasetManifest& m) {
  if (m.dataset_name.empty()) throw ManifestError("dataset_name must not be empty");
  if (m.num_classes <= 0) throw ManifestError("num_classes must be positive");
  if (m.baseline_accuracy && !(*m.baseline_accuracy >= 0.0 && *m.baseline_accuracy <= 1.0)) {
    throw ManifestError("baseline_accuracy must lie in [0, 1]");
  }
  if (m.layers.empty()) throw ManifestError("manifest declares no layers");

  std::set<LayerId> seen;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& e = m.layers[i];
    if (e.layer_id < 1) {
      throw ManifestError("layer_id " + std::to_string(e.layer_id) + " must be >= 1", "", e.layer_id);
    }
    if (!seen.insert(e.layer_id).second) {
      throw ManifestError("duplicate layer_id " + std::to_string(e.layer_id), "", e.layer_id);
    }
    if (i > 0 && e.layer_id <= m.layers[i - 1].layer_id) {
      throw ManifestError("layer_ids must be strictly increasing (" +
                              std::to_string(m.layers[i - 1].layer_id) + " then " +
                              std::to_string(e.layer_id) + ")",
                          "", e.layer_id);
    }
    if (e.dims == 0) {
      throw ManifestError("layer " + std::to_string(e.layer_id) + ": dims must be positive", "",
                          e.layer_id);
    }
  }

  std::optional<std::size_t> train_rows, test_rows;
  for (const auto& e : m.layers) {
    const struct {
      const std::string& rel;
      std::optional<std::size_t>& rows;
    } splits[] = {{e.train_path, train_rows}, {e.test_path, test_rows}};
    for (const auto& s : splits) {
      const fs::path p = m.resolve(s.rel);
      const npy::Header h = detail::matrix_header(p, e.layer_id);
      if (h.shape[1] != e.dims) {
        throw ManifestError("layer " + std::to_string(e.layer_id) + ": expected dims " +
                                std::to_string(e.dims) + ", file " + p.string() + " has " +
                                std::to_string(h.shape[1]),
                            p.string(), e.layer_id);
      }
      if (h.shape[0] == 0) {
        throw ManifestError("layer " + std::to_string(e.layer_id) + ": " + p.string() +
                                " has no rows",
                            p.string(), e.layer_id);
      }
      if (s.rows && *s.rows != h.shape[0]) {
        throw ManifestError("layer " + std::to_string(e.layer_id) + ": " + p.string() + " has " +
                                std::to_string(h.shape[0]) + " rows, other layers have " +
                                std::to_string(*s.rows),
                            p.string(), e.layer_id);
      }
      s.rows = h.shape[0];
    }
  }

  const struct {
    const std::string& rel;
    std::size_t rows;
  } label_files[] = {{m.train_labels_path, *train_rows}, {m.test_labels_path, *test_rows}};
  for (const auto& lf : label_files) {
    const fs::path p = m.resolve(lf.rel);
    detail::require_file(p);
    std::vector<ClassId> labels;
    try {
      labels = npy::read_labels(p);
    } catch (const Error& e) {
      throw ManifestError(e.what(), p.string());
    }
    if (labels.size() != lf.rows) {
      throw ManifestError(p.string() + ": " + std::to_string(labels.size()) +
                              " labels, embeddings have " + std::to_string(lf.rows) + " rows",
                          p.string());
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || labels[i] >= m.num_classes) {
        throw ManifestError(p.string() + ": label " + std::to_string(labels[i]) + " at index " +
                                std::to_string(i) + " outside [0, num_classes)",
                            p.string());
      }
    }
  }

  if (m.image_dir) {
    std::error_code ec;
    const fs::path p = m.resolve(*m.image_dir);
    if (!fs::is_directory(p, ec)) {
      throw ManifestError("image_dir does not exist: " + p.string(), p.string());
    }
  }
  m.train_rows = *train_rows;
  m.test_rows = *test_rows;
}

/// Parses and validates a manifest. Unknown keys are rejected unless `lax`.
inline DatasetManifest parse_manifest(const nlohmann::json& doc, const fs::path& base_dir,
                                      const std::string& path, bool lax = false) {
  if (!doc.is_object()) throw ManifestError(path + ": manifest must be a JSON object", path);
  if (!lax) {
    detail::check_keys(doc,
                       {"dataset_name", "num_classes", "baseline_accuracy", "layers",
                        "train_labels_path", "test_labels_path", "image_dir"},
                       "manifest", path);
  }
  DatasetManifest m;
  m.base_dir = base_dir;
  m.dataset_name = detail::required<std::string>(doc, "dataset_name", "manifest", path);
  m.num_classes = detail::required<ClassId>(doc, "num_classes", "manifest", path);
  if (doc.contains("baseline_accuracy") && !doc["baseline_accuracy"].is_null()) {
    m.baseline_accuracy = detail::required<double>(doc, "baseline_accuracy", "manifest", path);
  }
  m.train_labels_path = detail::required<std::string>(doc, "train_labels_path", "manifest", path);
  m.test_labels_path = detail::required<std::string>(doc, "test_labels_path", "manifest", path);
  if (doc.contains("image_dir") && !doc["image_dir"].is_null()) {
    m.image_dir = detail::required<std::string>(doc, "image_dir", "manifest", path);
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    throw ManifestError(path + ": 'layers' must be an array", path);
  }
  for (const auto& entry : doc["layers"]) {
    if (!entry.is_object()) throw ManifestError(path + ": layer entries must be objects", path);
    if (!lax) {
      detail::check_keys(entry, {"layer_id", "train_path", "test_path", "dims"}, "layer entry",
                         path);
    }
    LayerEntry e;
    e.layer_id = detail::required<LayerId>(entry, "layer_id", "layer entry", path);
    e.train_path = detail::required<std::string>(entry, "train_path", "layer entry", path);
    e.test_path = detail::required<std::string>(entry, "test_path", "layer entry", path);
    const auto dims = detail::required<std::int64_t>(entry, "dims", "layer entry", path);
    if (dims <= 0) {
      throw ManifestError(path + ": layer " + std::to_string(e.layer_id) + " has dims <= 0", path,
                          e.layer_id);
    }
    e.dims = static_cast<std::size_t>(dims);
    m.layers.push_back(std::move(e));
  }
  validate(m);
  return m;
}

inline DatasetManifest load_manifest(const fs::path& path, bool lax = false) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot read manifest " + path.string(), path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(path.string() + ": invalid JSON: " + e.what(), path.string());
  }
  return parse_manifest(doc, path.parent_path(), path.string(), lax);
}

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json doc;
  doc["dataset_name"] = m.dataset_name;
  doc["num_classes"] = m.num_classes;
  doc["baseline_accuracy"] =
      m.baseline_accuracy ? nlohmann::json(*m.baseline_accuracy) : nlohmann::json(nullptr);
  doc["layers"] = nlohmann::json::array();
  for (const auto& e : m.layers) {
    doc["layers"].push_back(
        {{"layer_id", e.layer_id}, {"train_path", e.train_path}, {"test_path", e.test_path},
         {"dims", e.dims}});
  }
  doc["train_labels_path"] = m.train_labels_path;
  doc["test_labels_path"] = m.test_labels_path;
  if (m.image_dir) doc["image_dir"] = *m.image_dir;
  return doc;
}

inline void write_manifest(const DatasetManifest& m, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_json(m).dump(2) << '\n';
  if (!out) throw IoError("write to " + path.string() + " failed");
}

// Loading helpers for one layer of a validated manifest.

inline LabelVector load_labels(const DatasetManifest& m, Split split) {
  const auto& rel = split == Split::Train ? m.train_labels_path : m.test_labels_path;
  return LabelVector(npy::read_labels(m.resolve(rel)), m.num_classes);
}

inline EmbeddingMatrix load_matrix(const DatasetManifest& m, LayerId layer, Split split) {
  const LayerEntry& e = m.layer(layer);
  EmbeddingMatrix mat = npy::read_matrix(m.resolve(split == Split::Train ? e.train_path : e.test_path));
  if (mat.dims() != e.dims) {
    throw ShapeError("layer " + std::to_string(layer) + ": expected dims " +
                     std::to_string(e.dims) + ", loaded " + std::to_string(mat.dims()));
  }
  mat.set_source_layer(layer);
  mat.set_split(split);
  return mat;
}

inline NormalizedIndex load_train_index(const DatasetManifest& m, LayerId layer) {
  return normalize(load_matrix(m, layer, Split::Train), load_labels(m, Split::Train));
}

}  // namespace ebe
