#pragma once

#include <stdexcept>
#include <string>

namespace gdeviate {

// Input that violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Explicit scheme step too large for the spatial mesh.
class CflViolation : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// A coefficient or an update produced a non-finite value.
class NumericalAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gdeviate
