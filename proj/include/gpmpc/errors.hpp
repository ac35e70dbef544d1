#pragma once

#include <stdexcept>
#include <string>

namespace gpmpc {

/// A factorization or solver could not produce a usable result.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double last_jitter = 0.0)
      : std::runtime_error(what), jitter_(last_jitter) {}

  /// Diagonal jitter in effect when the failure was raised (0 when unrelated).
  double jitter() const { return jitter_; }

 private:
  double jitter_;
};

/// Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0, std::size_t column = 0)
      : std::runtime_error(format(what, row, column)), row_(row), column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t row, std::size_t column) {
    std::string s = what;
    if (row > 0) s += " (row " + std::to_string(row);
    if (row > 0 && column > 0) s += ", column " + std::to_string(column);
    if (row > 0) s += ")";
    return s;
  }

  std::size_t row_;
  std::size_t column_;
};

/// Input data that parses but cannot be used (overlap, too few rows).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpmpc
