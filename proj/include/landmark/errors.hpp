#pragma once

#include <stdexcept>
#include <string>

namespace landmark {

// Input/schema problems -> CLI exit code 2
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (non-convergence, invalid domain) -> CLI exit code 3
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace landmark
