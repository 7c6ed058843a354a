#pragma once

#include <stdexcept>
#include <string>

namespace c3r {

// Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
// NumericalError -> 3.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& m) : std::runtime_error(m) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};

struct ShapeError : DataError {
  explicit ShapeError(const std::string& m) : DataError(m) {}
};

}  // namespace c3r
