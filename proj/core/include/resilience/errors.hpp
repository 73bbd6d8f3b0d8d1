#pragma once

#include <stdexcept>
#include <string>

namespace resilience {

/// Bad or inconsistent run configuration. CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unusable input data (no matching rows, uncovered windows, ...). Exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Sampler failure that invalidates a result (dead chain, bad rung). Exit code 4.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace resilience
