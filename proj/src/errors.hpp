#pragma once

#include <stdexcept>
#include <string>

namespace comorec {

// Error categories. The numeric codes double as process exit codes and as
// the status values of the C API: 1 usage, 2 data, 3 numeric.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int code = 1;
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int code = 2;
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int code = 3;
};

}  // namespace comorec
