#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace ebe {

enum class ErrorKind {
  Format,    // malformed tensor file
  Data,      // non-finite payload value, bad label
  Manifest,  // manifest invariant violated
  Shape,     // dimension mismatch
  Param,     // argument out of range
  Io,        // filesystem failure
  Internal,  // broken invariant inside the engine
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format: return "format error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Manifest: return "manifest error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Param: return "parameter error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};

/// Raised for invalid payload contents. For matrices, `row`/`col` locate the
/// first offending element.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
  DataError(const std::string& what, std::size_t row, std::size_t col)
      : Error(ErrorKind::Data, what), row_(row), col_(col) {}

  std::optional<std::size_t> row() const noexcept { return row_; }
  std::optional<std::size_t> col() const noexcept { return col_; }

 private:
  std::optional<std::size_t> row_;
  std::optional<std::size_t> col_;
};

class ManifestError : public Error {
 public:
  explicit ManifestError(const std::string& what, std::string path = {},
                         std::optional<std::int64_t> layer_id = std::nullopt)
      : Error(ErrorKind::Manifest, what), path_(std::move(path)), layer_id_(layer_id) {}

  const std::string& path() const noexcept { return path_; }
  std::optional<std::int64_t> layer_id() const noexcept { return layer_id_; }

 private:
  std::string path_;
  std::optional<std::int64_t> layer_id_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::Shape, what) {}
};

class ParamError : public Error {
 public:
  explicit ParamError(const std::string& what) : Error(ErrorKind::Param, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorKind::Internal, what) {}
};

/// Rethrows `e` as the same error kind with `prefix` prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& prefix) {
  const std::string msg = prefix + e.what();
  switch (e.kind()) {
    case ErrorKind::Format: throw FormatError(msg);
    case ErrorKind::Data: {
      const auto* d = dynamic_cast<const DataError*>(&e);
      if (d != nullptr && d->row() && d->col()) throw DataError(msg, *d->row(), *d->col());
      throw DataError(msg);
    }
    case ErrorKind::Manifest: {
      const auto* m = dynamic_cast<const ManifestError*>(&e);
      if (m != nullptr) throw ManifestError(msg, m->path(), m->layer_id());
      throw ManifestError(msg);
    }
    case ErrorKind::Shape: throw ShapeError(msg);
    case ErrorKind::Param: throw ParamError(msg);
    case ErrorKind::Io: throw IoError(msg);
    case ErrorKind::Internal: throw InternalError(msg);
  }
  throw InternalError(msg);
}

}  // namespace ebe
