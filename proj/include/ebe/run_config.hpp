#pragma once

// Command-line configuration shared by the `ebe` tool and its tests.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"

namespace ebe {

enum class Command { Index, Attribute, Sweep, Report };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Index: return "index";
    case Command::Attribute: return "attribute";
    case Command::Sweep: return "sweep";
    case Command::Report: return "report";
  }
  return "";
}

struct RunConfig {
  std::string manifest_path;
  Command command = Command::Index;
  bool lax = false;

  LayerId layer = 0;                    // index, attribute
  std::vector<LayerId> layer_list;      // sweep (--layers), report (--layer-list)
  std::size_t k = 0;                    // attribute, report
  std::vector<std::size_t> k_values;    // sweep
  std::vector<std::size_t> query_ids;   // attribute, report
  std::string out;                      // attribute (optional), sweep, report
  std::string images;                   // report
  std::size_t columns = 5;              // report
  std::size_t threads = 0;              // 0 = auto
  std::size_t max_resident_layers = 1;  // sweep
  bool cache = false;                   // index
};

/// Long flags accepted by each subcommand; `--help` must list all of them.
inline std::vector<std::string> command_flags(Command c) {
  switch (c) {
    case Command::Index: return {"--manifest", "--layer", "--cache", "--lax"};
    case Command::Attribute:
      return {"--manifest", "--layer", "--k", "--queries", "--out", "--threads", "--lax"};
    case Command::Sweep:
      return {"--manifest", "--layers", "--k", "--out", "--max-resident-layers", "--threads", "--lax"};
    case Command::Report:
      return {"--manifest", "--layer-list", "--k", "--queries", "--images", "--out", "--columns",
              "--threads", "--lax"};
  }
  return {};
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return 3;
    case ErrorKind::Internal: return 4;
    default: return 2;
  }
}

namespace detail {

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != end) {
    throw ParamError("invalid " + std::string(what) + " '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Parses "1,5,10" or ranges such as "1-20" and "1-3,7". Order is preserved.
inline std::vector<std::int64_t> parse_id_list(std::string_view text, std::string_view what) {
  std::vector<std::int64_t> out;
  if (text.empty()) throw ParamError("empty " + std::string(what) + " list");
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string_view item =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const std::size_t dash = item.find('-', 1);
    if (dash != std::string_view::npos) {
      const auto lo = detail::parse_int(item.substr(0, dash), what);
      const auto hi = detail::parse_int(item.substr(dash + 1), what);
      if (hi < lo) throw ParamError("descending range '" + std::string(item) + "' in " + std::string(what));
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(detail::parse_int(item, what));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<std::size_t> parse_count_list(std::string_view text, std::string_view what,
                                                 bool allow_zero) {
  std::vector<std::size_t> out;
  for (const auto v : parse_id_list(text, what)) {
    if (v < 0 || (!allow_zero && v == 0)) {
      throw ParamError(std::string(what) + " value " + std::to_string(v) + " out of range");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

/// "auto" (or empty) means all hardware threads, returned as 0.
inline std::size_t parse_threads(std::string_view text) {
  if (text.empty() || text == "auto") return 0;
  const auto v = detail::parse_int(text, "thread count");
  if (v <= 0) throw ParamError("thread count must be positive or 'auto'");
  return static_cast<std::size_t>(v);
}

/// Thread default from the EBE_THREADS environment variable, else auto.
inline std::size_t default_threads() {
  const char* env = std::getenv("EBE_THREADS");
  return env == nullptr ? 0 : parse_threads(env);
}

}  // namespace ebe
