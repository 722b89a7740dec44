#pragma once

#include <stdexcept>
#include <string>

namespace emblens {

// Error categories map 1:1 onto the CLI exit codes:
// UsageError -> 2, DataError -> 3, NumericError -> 4.

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace emblens
