#pragma once

// Static HTML galleries: for every (query, layer) pair, the test image
// followed by its neighbors in rank order. Images are inlined as data URIs so
// the page is a single self-contained file.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"
#include "ebe/knn.hpp"

namespace ebe {

struct GallerySpec {
  std::vector<std::size_t> query_ids;
  std::vector<LayerId> layer_ids;
  std::size_t k = 10;
  std::filesystem::path image_dir;
  std::filesystem::path output_path;
  std::size_t columns = 5;
  std::string title = "Example attributions";
};

/// `<split>_<index>.png` inside the image directory.
inline std::filesystem::path image_path(const std::filesystem::path& dir, Split split,
                                        std::size_t index) {
  return dir / (std::string(to_string(split)) + "_" + std::to_string(index) + ".png");
}

inline std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

class ImageCache {
 public:
  explicit ImageCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  /// Throws DataError naming the path if the image is missing.
  const std::string& data_uri(Split split, std::size_t index) {
    const auto key = std::pair{split, index};
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto path = image_path(dir_, split, index);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing image file: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return cache_.emplace(key, "data:image/png;base64," + base64_encode(bytes)).first->second;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::pair<Split, std::size_t>, std::string> cache_;
};

}  // namespace detail

/// Renders the gallery. `attributions` must hold one entry per
/// (query, layer) in the spec; sections follow spec.query_ids order, then
/// ascending layer id. Every referenced image is resolved before any HTML is
/// produced.
inline std::string render_gallery(const GallerySpec& spec, const std::vector<Attribution>& attributions,
                                  const std::vector<ClassId>& test_labels) {
  std::vector<LayerId> layers = spec.layer_ids;
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());

  std::map<std::pair<std::size_t, LayerId>, const Attribution*> by_key;
  for (const auto& a : attributions) by_key[{a.query_id, a.layer_id}] = &a;

  std::vector<const Attribution*> sections;
  for (const std::size_t q : spec.query_ids) {
    for (const LayerId l : layers) {
      auto it = by_key.find({q, l});
      if (it == by_key.end()) {
        throw InternalError("no attribution for query " + std::to_string(q) + " at layer " +
                            std::to_string(l));
      }
      sections.push_back(it->second);
    }
  }

  detail::ImageCache images(spec.image_dir);
  for (const auto* a : sections) {
    images.data_uri(Split::Test, a->query_id);
    for (const auto& nb : a->neighbors) images.data_uri(Split::Train, nb.train_index);
  }

  const std::size_t columns = std::max<std::size_t>(spec.columns, 1);
  std::string html;
  html += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  html += "<title>" + html_escape(spec.title) + "</title>\n<style>\n";
  html += "body { font-family: sans-serif; margin: 1.5em; }\n";
  html += ".grid { display: grid; grid-template-columns: repeat(" + std::to_string(columns + 1) +
          ", max-content); gap: 0.6em; align-items: start; }\n";
  html += "figure { margin: 0; text-align: center; }\n";
  html += "figure img { width: 96px; height: 96px; image-rendering: pixelated; }\n";
  html += "figure.test { grid-row: span " +
          std::to_string(std::max<std::size_t>(1, (spec.k + columns - 1) / columns)) +
          "; border-right: 2px solid #444; padding-right: 0.6em; }\n";
  html += "figcaption { font-size: 0.8em; }\n</style>\n</head>\n<body>\n";
  html += "<h1>" + html_escape(spec.title) + "</h1>\n";

  for (const auto* a : sections) {
    html += "<section class=\"attribution\" data-query=\"" + std::to_string(a->query_id) +
            "\" data-layer=\"" + std::to_string(a->layer_id) + "\">\n";
    html += "<h2>Test object " + std::to_string(a->query_id) + ", layer " +
            std::to_string(a->layer_id) + ", k = " + std::to_string(a->k) + "</h2>\n";
    html += "<div class=\"grid\">\n";
    std::string truth = a->query_id < test_labels.size() ? std::to_string(test_labels[a->query_id]) : "?";
    html += "<figure class=\"test\"><img alt=\"test " + std::to_string(a->query_id) + "\" src=\"" +
            images.data_uri(Split::Test, a->query_id) + "\"><figcaption>test " +
            std::to_string(a->query_id) + " / label " + truth + " / predicted " +
            std::to_string(a->predicted_label) + "</figcaption></figure>\n";
    for (std::size_t i = 0; i < a->neighbors.size(); ++i) {
      const auto& nb = a->neighbors[i];
      const std::string dist = detail::fixed4(nb.distance);
      html += "<figure class=\"neighbor\" data-rank=\"" + std::to_string(nb.rank) +
              "\" data-train-index=\"" + std::to_string(nb.train_index) + "\"><img alt=\"train " +
              std::to_string(nb.train_index) + "\" src=\"" +
              images.data_uri(Split::Train, nb.train_index) + "\"><figcaption>" +
              std::to_string(nb.rank) + " / " + std::to_string(a->neighbor_labels[i]) + " / " +
              dist + "</figcaption></figure>\n";
    }
    html += "</div>\n</section>\n";
  }
  html += "</body>\n</html>\n";
  return html;
}

}  // namespace ebe
