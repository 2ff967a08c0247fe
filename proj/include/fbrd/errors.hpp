#pragma once

#include <stdexcept>
#include <string>

namespace fbrd {

// Invalid inputs or infeasible targets detected before/at dispatch.
// The CLI maps this to exit code 2.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside an otherwise valid computation
// (quadrature budget exhausted, bracketing impossible, ...).
// The CLI maps this to exit code 3.
class ComputationError : public std::runtime_error {
 public:
  explicit ComputationError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fbrd
