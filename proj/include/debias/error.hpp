#pragma once

#include <stdexcept>
#include <string>

namespace debias {

// Malformed input files, unreadable paths, binary layout violations.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace debias
