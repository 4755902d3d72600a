#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deepcam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes or lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside its allowed set (row counts, word lengths, angles...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Structural problem while decoding a binary container.
class FormatError : public Error {
 public:
  enum class Code {
    kBadMagic,
    kVersionMismatch,
    kTruncated,
    kUnknownKind,
    kBadFlags,
    kShapeMismatch,
    kBadLabel,
    kTrailingData,
  };

  FormatError(Code code, std::size_t offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        code_(code),
        offset_(offset) {}

  Code code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Code code_;
  std::size_t offset_;
};

}  // namespace deepcam
