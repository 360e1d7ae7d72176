#pragma once

#include <stdexcept>
#include <string>

namespace dpe {

// Invalid input: bad spec, out-of-range index, domain violation. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model family lacks the requested capability (sampling, enumeration, closed forms).
class CapabilityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An iterative solver failed to meet its tolerance. CLI exit code 3.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dpe
