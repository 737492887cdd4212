#pragma once

#include <stdexcept>
#include <string>

namespace backreact {

// Bad input to an operation (violated precondition).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced a non-finite value or broke a conservation check.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistical experiment whose setup does not satisfy its own validity
// condition (for example two mixtures that do not realize the same rho).
class PreconditionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace backreact
