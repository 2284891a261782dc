#pragma once

// Reader/writer for the NumPy .npy container, restricted to format version
// 1.0, C order, and the two dtypes the engine exchanges: '<f4' matrices and
// '<i8' label vectors.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ebe/embedding.hpp"
#include "ebe/error.hpp"

namespace ebe::npy {

static_assert(std::endian::native == std::endian::little,
              "payloads are copied verbatim; big-endian hosts are not supported");

inline constexpr std::array<unsigned char, 6> kMagic = {0x93, 'N', 'U', 'M', 'P', 'Y'};
inline constexpr std::size_t kPreambleSize = 10;  // magic + version + header length
inline constexpr std::size_t kAlignment = 64;

struct Header {
  std::string descr;
  bool fortran_order = false;
  std::vector<std::size_t> shape;
  std::size_t payload_offset = 0;

  std::size_t element_count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

namespace detail {

// Minimal parser for the Python dict literal stored in the header.
class DictParser {
 public:
  DictParser(std::string_view text, const std::string& path) : text_(text), path_(path) {}

  Header parse() {
    Header h;
    bool have_descr = false, have_order = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        if (have_descr) fail("duplicate key 'descr'");
        h.descr = parse_string();
        have_descr = true;
      } else if (key == "fortran_order") {
        if (have_order) fail("duplicate key 'fortran_order'");
        h.fortran_order = parse_bool();
        have_order = true;
      } else if (key == "shape") {
        if (have_shape) fail("duplicate key 'shape'");
        h.shape = parse_tuple();
        have_shape = true;
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail("expected ',' or '}' in header");
      }
    }
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters after header dict");
    if (!have_descr || !have_order || !have_shape) fail("header is missing a required key");
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(path_ + ": malformed header: " + msg);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    skip_ws();
    const char quote = peek();
    if (quote != '\'' && quote != '"') fail("expected string literal");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) fail("unterminated string literal");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  std::vector<std::size_t> parse_tuple() {
    std::vector<std::size_t> dims;
    expect('(');
    while (true) {
      skip_ws();
      if (peek() == ')') {
        ++pos_;
        break;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer in shape");
      std::size_t v = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        v = v * 10 + static_cast<std::size_t>(peek() - '0');
        ++pos_;
      }
      dims.push_back(v);
      skip_ws();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        fail("expected ',' or ')' in shape");
      }
    }
    return dims;
  }

  std::string_view text_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

inline Header read_header(std::istream& in, const std::string& path) {
  std::array<unsigned char, kPreambleSize> pre{};
  if (!in.read(reinterpret_cast<char*>(pre.data()), pre.size())) {
    throw FormatError(path + ": file too short for a tensor header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), pre.begin())) {
    throw FormatError(path + ": bad magic bytes");
  }
  if (pre[6] != 1 || pre[7] != 0) {
    throw FormatError(path + ": unsupported format version " + std::to_string(pre[6]) + "." +
                      std::to_string(pre[7]) + " (only 1.0 is accepted)");
  }
  const std::size_t header_len = static_cast<std::size_t>(pre[8]) |
                                 (static_cast<std::size_t>(pre[9]) << 8);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw FormatError(path + ": truncated header");
  }
  if (header_len == 0 || text.back() != '\n') {
    throw FormatError(path + ": header is not newline-terminated");
  }
  Header h = DictParser(std::string_view(text).substr(0, header_len - 1), path).parse();
  if (h.fortran_order) throw FormatError(path + ": fortran_order True is not supported");
  h.payload_offset = kPreambleSize + header_len;
  return h;
}

inline std::size_t element_size(const std::string& descr) {
  if (descr == "<f4") return 4;
  if (descr == "<i8") return 8;
  return 0;
}

template <typename T>
std::vector<T> read_payload(std::istream& in, const Header& h, const std::string& path) {
  const std::size_t count = h.element_count();
  std::vector<T> out(count);
  const auto bytes = static_cast<std::streamsize>(count * sizeof(T));
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(out.data()), bytes)) {
    throw FormatError(path + ": payload shorter than declared shape");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path + ": trailing bytes after payload");
  }
  return out;
}

inline std::string format_header(const std::string& descr, const std::vector<std::size_t>& shape) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) dict += ", ";
    dict += std::to_string(shape[i]);
  }
  if (shape.size() == 1) dict += ",";
  dict += "), }";
  // Same layout NumPy 2.x emits: room for the leading axis to grow in place,
  // then space padding so the payload starts on a 64-byte boundary.
  const std::size_t lead_digits = shape.empty() ? 1 : std::to_string(shape[0]).size();
  if (lead_digits < 21) dict.append(21 - lead_digits, ' ');
  const std::size_t unpadded = kPreambleSize + dict.size() + 1;
  const std::size_t pad = (kAlignment - unpadded % kAlignment) % kAlignment;
  dict.append(pad, ' ');
  dict.push_back('\n');
  return dict;
}

template <typename T>
void write_array(const std::filesystem::path& path, const std::string& descr,
                 const std::vector<std::size_t>& shape, std::span<const T> data) {
  const std::string header = format_header(descr, shape);
  if (header.size() > 0xFFFF) throw FormatError("header too long for format version 1.0");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(kMagic.data()), kMagic.size());
  const char version_and_len[4] = {1, 0, static_cast<char>(header.size() & 0xFF),
                                   static_cast<char>((header.size() >> 8) & 0xFF)};
  out.write(version_and_len, 4);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(T)));
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace detail

/// Parses and validates only the header of a tensor file. Accepts either
/// supported dtype; callers check the dtype they expect.
inline Header read_header(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  Header h = detail::read_header(in, path.string());
  if (detail::element_size(h.descr) == 0) {
    throw FormatError(path.string() + ": unsupported dtype '" + h.descr + "'");
  }
  return h;
}

/// Loads a '<f4' 1-D or 2-D array. A 1-D array of length d becomes a 1 x d matrix.
inline EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
  const std::string p = path.string();
  auto in = detail::open_for_read(path);
  const Header h = detail::read_header(in, p);
  if (h.descr != "<f4") {
    throw FormatError(p + ": expected dtype '<f4', found '" + h.descr + "'");
  }
  std::size_t rows = 0, dims = 0;
  if (h.shape.size() == 2) {
    rows = h.shape[0];
    dims = h.shape[1];
  } else if (h.shape.size() == 1) {
    rows = 1;
    dims = h.shape[0];
  } else {
    throw FormatError(p + ": expected a 1-D or 2-D array, found " +
                      std::to_string(h.shape.size()) + " dimensions");
  }
  if (rows == 0 || dims == 0) throw FormatError(p + ": empty matrix");
  EmbeddingMatrix m(rows, dims, detail::read_payload<float>(in, h, p));
  try {
    m.check_finite();
  } catch (const DataError& e) {
    throw DataError(p + ": " + e.what(), *e.row(), *e.col());
  }
  return m;
}

inline void write_matrix(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  matrix.check_finite();
  detail::write_array<float>(path, "<f4", {matrix.rows(), matrix.dims()}, matrix.values());
}

/// Loads a '<i8' 1-D label array.
inline std::vector<ClassId> read_labels(const std::filesystem::path& path) {
  const std::string p = path.string();
  auto in = detail::open_for_read(path);
  const Header h = detail::read_header(in, p);
  if (h.descr != "<i8") {
    throw FormatError(p + ": expected dtype '<i8', found '" + h.descr + "'");
  }
  if (h.shape.size() != 1) throw FormatError(p + ": labels must be a 1-D array");
  return detail::read_payload<ClassId>(in, h, p);
}

inline void write_labels(std::span<const ClassId> labels, const std::filesystem::path& path) {
  detail::write_array<ClassId>(path, "<i8", {labels.size()}, labels);
}

/// '<f8' matrix I/O, used only for the normalized-index cache.
inline void write_f8_matrix(std::span<const double> values, std::size_t rows, std::size_t dims,
                            const std::filesystem::path& path) {
  detail::write_array<double>(path, "<f8", {rows, dims}, values);
}

inline std::vector<double> read_f8_matrix(const std::filesystem::path& path, std::size_t& rows,
                                          std::size_t& dims) {
  const std::string p = path.string();
  auto in = detail::open_for_read(path);
  const Header h = detail::read_header(in, p);
  if (h.descr != "<f8" || h.shape.size() != 2) {
    throw FormatError(p + ": expected a 2-D '<f8' array");
  }
  rows = h.shape[0];
  dims = h.shape[1];
  return detail::read_payload<double>(in, h, p);
}

}  // namespace ebe::npy
