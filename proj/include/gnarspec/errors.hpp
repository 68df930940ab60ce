#pragma once

#include <stdexcept>
#include <string>

namespace gnarspec {

// Base of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed inputs: bad dimensions, bad file contents, out-of-range labels.
struct InvalidArgument : Error {
  using Error::Error;
};

// Filesystem problems: missing or unwritable files.
struct IoError : Error {
  using Error::Error;
};

// Estimation or linear-algebra failures: singular systems, condition-number
// guard trips, non-convergence.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace gnarspec
