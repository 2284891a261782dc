#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"
#include "ebe/index.hpp"
#include "ebe/knn.hpp"
#include "ebe/manifest.hpp"
#include "ebe/parallel.hpp"

namespace ebe {

struct SweepConfig {
  std::vector<LayerId> layer_ids;
  std::vector<std::size_t> k_values;
  Metric metric = Metric::Cosine;
};

struct SweepCell {
  LayerId layer_id = 0;
  std::size_t k = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
  double mean_purity = 0.0;
  std::optional<double> baseline_delta;

  friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepResult {
  std::string dataset_name;
  std::optional<double> baseline_accuracy;
  std::vector<SweepCell> cells;  // sorted by (layer_id, k)
  std::size_t test_count = 0;

  const SweepCell* find(LayerId layer, std::size_t k) const {
    for (const auto& c : cells) {
      if (c.layer_id == layer && c.k == k) return &c;
    }
    return nullptr;
  }

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct SweepOptions {
  ExecOptions exec;
  std::size_t max_resident_layers = 1;
};

/// Fraction of queries whose neighbors share the predicted label.
inline double purity(const Attribution& a) {
  const auto same = std::count(a.neighbor_labels.begin(), a.neighbor_labels.end(), a.predicted_label);
  return static_cast<double>(same) / static_cast<double>(a.k);
}

/// Accuracy and mean purity of one layer for every k. Neighbors are
/// retrieved once at max(k); smaller k reuse the leading entries.
inline std::vector<SweepCell> evaluate_layer(const NormalizedIndex& train, const QueryBatch& test,
                                             const LabelVector& test_labels,
                                             std::vector<std::size_t> k_values,
                                             const ExecOptions& opts = {}) {
  if (k_values.empty()) throw ParamError("k_values must not be empty");
  if (test.size() == 0) throw ParamError("accuracy over an empty query set is undefined");
  std::sort(k_values.begin(), k_values.end());
  if (std::adjacent_find(k_values.begin(), k_values.end()) != k_values.end()) {
    throw ParamError("duplicate k value");
  }
  const std::size_t k_max = k_values.back();
  if (k_values.front() == 0 || k_max > train.rows()) {
    throw ParamError("k values must satisfy 0 < k <= n (n=" + std::to_string(train.rows()) + ")");
  }
  const auto lists = batch_top_k(test, train, k_max, opts);

  std::vector<SweepCell> cells;
  cells.reserve(k_values.size());
  for (const std::size_t k : k_values) {
    SweepCell cell;
    cell.layer_id = train.source_layer();
    cell.k = k;
    cell.total = test.size();
    double purity_sum = 0.0;
    for (std::size_t q = 0; q < test.size(); ++q) {
      const std::size_t qid = test.query_ids()[q];
      if (qid >= test_labels.size()) {
        throw ShapeError("query id " + std::to_string(qid) + " has no test label");
      }
      NeighborList prefix(lists[q].begin(), lists[q].begin() + static_cast<std::ptrdiff_t>(k));
      const Attribution a = make_attribution(qid, std::move(prefix), train);
      if (a.predicted_label == test_labels[qid]) ++cell.correct;
      purity_sum += purity(a);
    }
    cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
    cell.mean_purity = purity_sum / static_cast<double>(cell.total);
    cells.push_back(cell);
  }
  return cells;
}

/// Accuracy grid over (layer, k) for a validated manifest. Up to
/// `max_resident_layers` layers are loaded and evaluated at once; cells come
/// back ordered by (layer_id, k) regardless.
inline SweepResult run_sweep(const DatasetManifest& manifest, SweepConfig config,
                             const SweepOptions& opts = {}) {
  if (config.layer_ids.empty()) throw ParamError("sweep needs at least one layer");
  if (config.k_values.empty()) throw ParamError("sweep needs at least one k value");
  std::sort(config.layer_ids.begin(), config.layer_ids.end());
  std::sort(config.k_values.begin(), config.k_values.end());
  if (std::adjacent_find(config.layer_ids.begin(), config.layer_ids.end()) != config.layer_ids.end()) {
    throw ParamError("duplicate layer id in sweep");
  }
  if (std::adjacent_find(config.k_values.begin(), config.k_values.end()) != config.k_values.end()) {
    throw ParamError("duplicate k value in sweep");
  }
  for (const LayerId id : config.layer_ids) manifest.layer(id);
  if (config.k_values.front() == 0) throw ParamError("k must be positive");
  if (config.k_values.back() > manifest.train_rows) {
    throw ParamError("k=" + std::to_string(config.k_values.back()) + " exceeds n=" +
                     std::to_string(manifest.train_rows));
  }

  const LabelVector train_labels = load_labels(manifest, Split::Train);
  const LabelVector test_labels = load_labels(manifest, Split::Test);

  const std::size_t resident = std::max<std::size_t>(1, opts.max_resident_layers);
  const std::size_t layer_workers = std::min(resident, config.layer_ids.size());
  ExecOptions inner = opts.exec;
  const std::size_t total_threads = resolve_threads(opts.exec.threads);
  inner.threads = std::max<std::size_t>(1, total_threads / layer_workers);

  std::vector<std::vector<SweepCell>> per_layer(config.layer_ids.size());
  parallel_for(config.layer_ids.size(), layer_workers, [&](std::size_t i) {
    const LayerId id = config.layer_ids[i];
    try {
      const NormalizedIndex index =
          normalize(load_matrix(manifest, id, Split::Train), train_labels);
      const EmbeddingMatrix test = load_matrix(manifest, id, Split::Test);
      per_layer[i] = evaluate_layer(index, QueryBatch(test), test_labels, config.k_values, inner);
    } catch (const Error& e) {
      rethrow_with_context(e, "layer " + std::to_string(id) + ": ");
    }
  });

  SweepResult result;
  result.dataset_name = manifest.dataset_name;
  result.baseline_accuracy = manifest.baseline_accuracy;
  result.test_count = manifest.test_rows;
  for (auto& cells : per_layer) {
    for (auto& c : cells) {
      if (manifest.baseline_accuracy) c.baseline_delta = c.accuracy - *manifest.baseline_accuracy;
      result.cells.push_back(c);
    }
  }
  return result;
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace detail

inline constexpr const char* kSweepCsvHeader =
    "dataset,layer_id,k,accuracy,mean_purity,baseline_accuracy,baseline_delta";

/// CSV rendering of a sweep; one row per cell in (layer_id, k) order.
inline std::string format_sweep_csv(const SweepResult& r) {
  std::string out = std::string(kSweepCsvHeader) + "\n";
  for (const auto& c : r.cells) {
    out += r.dataset_name;
    out += ',' + std::to_string(c.layer_id);
    out += ',' + std::to_string(c.k);
    out += ',' + detail::fixed6(c.accuracy);
    out += ',' + detail::fixed6(c.mean_purity);
    out += ',' + (r.baseline_accuracy ? detail::fixed6(*r.baseline_accuracy) : std::string());
    out += ',' + (c.baseline_delta ? detail::fixed6(*c.baseline_delta) : std::string());
    out += '\n';
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace ebe
