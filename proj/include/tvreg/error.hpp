#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace tvreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of two operands disagree (rows, columns, masks).
class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A computation produced NaN/Inf or otherwise broke a numeric contract.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Raised by the binary readers. Names the field being decoded and the byte
// offset at which decoding failed.
class ParseError : public Error {
 public:
  ParseError(std::string field, std::size_t offset, const std::string& what)
      : Error("parse error in field '" + field + "' at byte " +
              std::to_string(offset) + ": " + what),
        field_(std::move(field)),
        offset_(offset) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string field_;
  std::size_t offset_;
};

}  // namespace tvreg
