#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace gridtrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Archive structure violated (row count mismatch, truncated storm).
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A single field could not be interpreted. Carries the raw token.
class FieldError : public Error {
 public:
  FieldError(std::size_t line, std::string token, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what + " '" + token + "'"),
        line_(line),
        token_(std::move(token)) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] const std::string& token() const noexcept { return token_; }

 private:
  std::size_t line_;
  std::string token_;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Timestamps of a storm are not strictly increasing.
class OrderingError : public Error {
 public:
  OrderingError(std::string storm_id, const std::string& what)
      : Error(storm_id + ": " + what), storm_id_(std::move(storm_id)) {}
  [[nodiscard]] const std::string& storm_id() const noexcept { return storm_id_; }

 private:
  std::string storm_id_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class OutOfBoundsError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument or configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, std::string storm_id)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + " on storm " + storm_id),
        epoch_(epoch),
        storm_id_(std::move(storm_id)) {}
  [[nodiscard]] int epoch() const noexcept { return epoch_; }
  [[nodiscard]] const std::string& storm_id() const noexcept { return storm_id_; }

 private:
  int epoch_;
  std::string storm_id_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridtrack
