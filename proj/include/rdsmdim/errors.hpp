#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdsmdim {

/// A requested computation would exceed a configured resource limit.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cover does not cover the point set it is applied to.
class CoverageError : public std::runtime_error {
 public:
  CoverageError(const std::string& what, std::size_t point, std::size_t step)
      : std::runtime_error(what), witness_point(point), witness_step(step) {}
  std::size_t witness_point;
  std::size_t witness_step;
};

/// Configuration text could not be turned into a valid sweep configuration.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string key = {})
      : std::runtime_error(what), line(line), key_path(std::move(key)) {}
  int line;              // 1-based, 0 when not tied to a line
  std::string key_path;  // "section.key", empty when not tied to a key
};

}  // namespace rdsmdim
