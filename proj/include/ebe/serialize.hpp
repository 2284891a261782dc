#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include "ebe/knn.hpp"

namespace ebe {

namespace detail {

inline std::string sig10(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// One attribution as a single-line JSON object (no trailing newline).
/// Field order is fixed; distances carry 10 significant digits.
inline std::string to_json_line(const Attribution& a) {
  std::string s = "{\"query_id\":" + std::to_string(a.query_id) +
                  ",\"layer_id\":" + std::to_string(a.layer_id) +
                  ",\"k\":" + std::to_string(a.k) +
                  ",\"predicted_label\":" + std::to_string(a.predicted_label) + ",\"neighbors\":[";
  for (std::size_t i = 0; i < a.neighbors.size(); ++i) {
    const auto& nb = a.neighbors[i];
    if (i > 0) s += ',';
    s += "{\"rank\":" + std::to_string(nb.rank) + ",\"train_index\":" +
         std::to_string(nb.train_index) + ",\"distance\":" + detail::sig10(nb.distance) +
         ",\"label\":" + std::to_string(a.neighbor_labels[i]) +
         ",\"weight\":" + detail::shortest(a.weights[i]) + '}';
  }
  s += "]}";
  return s;
}

inline std::string to_json_lines(const std::vector<Attribution>& attributions) {
  std::string out;
  for (const auto& a : attributions) {
    out += to_json_line(a);
    out += '\n';
  }
  return out;
}

}  // namespace ebe
