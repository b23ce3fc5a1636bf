#pragma once

#include <stdexcept>
#include <string>

namespace pinet {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Vector / matrix dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared inside a computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Optimisation diverged.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  // Prefixes context to an existing error, keeping its epoch.
  TrainingError(const std::string& context, const TrainingError& inner)
      : Error(context + ": " + inner.what()), epoch_(inner.epoch()) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Invalid experiment / method configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible serialized artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

// CSV ingestion failure. row() is the 1-based data row (0 for file-level problems).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}
  ParseError(const std::string& context, const ParseError& inner)
      : Error(context + ": " + inner.what()), row_(inner.row()) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace pinet
