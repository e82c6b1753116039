#pragma once

#include <stdexcept>
#include <string>

namespace gx {

// Exception families. The CLI maps them onto exit codes:
// ConfigError -> 2, DataError (and subclasses) -> 3, NumericError -> 4.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph invariant violations (bad endpoints, duplicate edges, ...).
class GraphError : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& detail, int line, const std::string& source = {})
      : DataError((source.empty() ? "" : source + ": ") + "line " + std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] const std::string& detail() const { return detail_; }

 private:
  int line_;
  std::string detail_;
};

class EncodingError : public DataError {
 public:
  using DataError::DataError;
};

class SizeError : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gx
