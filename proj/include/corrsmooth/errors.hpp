#pragma once

#include <stdexcept>
#include <string>

namespace corrsmooth {

// Bad arguments or violated preconditions.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// A computation that could not produce a usable number (singular systems,
// empty kernel windows, solver failures).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// File or format problems.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace corrsmooth
