#pragma once

#include <filesystem>
#include <string>

#include "ebe/index.hpp"
#include "ebe/manifest.hpp"
#include "ebe/npy.hpp"

namespace ebe {

/// `<train file>.norm`, next to the source matrix.
inline std::filesystem::path cache_path(const DatasetManifest& m, LayerId layer) {
  auto p = m.resolve(m.layer(layer).train_path);
  p += ".norm";
  return p;
}

struct CachedIndex {
  NormalizedIndex index;
  bool from_cache = false;
};

/// Loads the layer's training index, reusing the `.norm` cache when it is at
/// least as new as the source file and has the expected shape. Otherwise the
/// index is rebuilt and, if `write_cache`, the cache is (re)written.
inline CachedIndex load_cached_index(const DatasetManifest& m, LayerId layer, bool write_cache) {
  namespace fs = std::filesystem;
  const auto source = m.resolve(m.layer(layer).train_path);
  const auto cache = cache_path(m, layer);
  std::error_code ec;
  if (fs::is_regular_file(cache, ec) &&
      fs::last_write_time(cache, ec) >= fs::last_write_time(source, ec) && !ec) {
    try {
      std::size_t rows = 0, dims = 0;
      auto values = npy::read_f8_matrix(cache, rows, dims);
      if (rows == m.train_rows && dims == m.layer(layer).dims) {
        return {NormalizedIndex::from_unit_rows(std::move(values), rows, dims,
                                                load_labels(m, Split::Train), layer),
                true};
      }
    } catch (const FormatError&) {
      // stale or foreign file; rebuild below
    }
  }
  NormalizedIndex index = load_train_index(m, layer);
  if (write_cache) npy::write_f8_matrix(index.unit_rows(), index.rows(), index.dims(), cache);
  return {std::move(index), false};
}

}  // namespace ebe
