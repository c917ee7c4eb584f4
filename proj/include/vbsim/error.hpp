#pragma once

#include <stdexcept>
#include <string>

namespace vbsim {

// Bad input: violated precondition, malformed file, unknown key.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The numbers are well-formed but the computation cannot proceed
// (degenerate geometry, level assignment failure, sampler exhaustion).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vbsim
