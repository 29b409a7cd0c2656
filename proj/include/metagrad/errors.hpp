#pragma once

#include <stdexcept>
#include <string>

namespace metagrad {

/// A precondition or parameter constraint was violated. The CLI maps this to exit code 1.
class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN/Inf, or an iterative solver broke down. The CLI maps this to exit code 2.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConstraintError(message);
}

}  // namespace metagrad
