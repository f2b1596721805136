#pragma once

#include <stdexcept>
#include <string>

namespace memsfde {

/// Bad input or a violated precondition. Raised before any computation runs.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical failure discovered mid-computation, e.g. a volatility that
/// evaluates to zero where the measure change needs it strictly positive.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace memsfde
