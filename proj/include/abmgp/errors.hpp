#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abmgp {

/// Invalid configuration values or malformed config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with input data: CSV structure, schema mismatches, unknown variables.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rule text that does not parse. `position` is a 0-based byte offset.
class ParseError : public DataError {
 public:
  ParseError(const std::string& detail, std::size_t position)
      : DataError(detail + " at position " + std::to_string(position)), detail_(detail), position_(position) {}
  std::size_t position() const noexcept { return position_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t position_;
};

/// Evaluation against bindings that do not cover the expression.
class EvalError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace abmgp
