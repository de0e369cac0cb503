#pragma once

#include <stdexcept>
#include <string>

namespace ps3 {

// Bad inputs: malformed files, invariant violations, out-of-range arguments.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Constraint automaton admits no sequence within the configured length budget.
class UnsatisfiableError : public std::runtime_error {
 public:
  explicit UnsatisfiableError(const std::string& msg) : std::runtime_error(msg) {}
};

// Search finished without producing an accepted hypothesis (beam too small,
// or no finished hypothesis within the step budget).
class DecodeFailure : public std::runtime_error {
 public:
  explicit DecodeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Brute-force helpers refuse instances above their size guard.
class GuardExceeded : public std::runtime_error {
 public:
  explicit GuardExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ps3
