#pragma once

#include <stdexcept>
#include <string>

namespace qprobe {

// Precondition violations on caller-supplied values (bad pmf, p out of range, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The requested arrival process or signal load is at or beyond saturation.
class SaturationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qprobe
