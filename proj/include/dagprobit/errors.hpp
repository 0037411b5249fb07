#pragma once

#include <stdexcept>
#include <string>

namespace dagprobit {

// Failure categories map onto the CLI exit codes: validation -> 2,
// numeric -> 3, io -> 4.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dagprobit
