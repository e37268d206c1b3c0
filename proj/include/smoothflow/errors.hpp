#pragma once

#include <stdexcept>
#include <string>

namespace smoothflow {

/// Malformed or inconsistent configuration, or an unreadable input file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A non-finite value where a finite one was required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace smoothflow
