#pragma once

#include <stdexcept>
#include <string>

namespace toolforge {

// Input failed a contract check (bad value, inverted range, unknown key...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file could not be parsed. The message carries the location.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toolforge
