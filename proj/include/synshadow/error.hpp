#pragma once

#include <stdexcept>
#include <string>

namespace synshadow {

// Bad input: arguments, configuration, or data violating a precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Failure while doing work on valid input (I/O, exhausted retries, ...).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

namespace detail {

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw ValidationError(what);
}

inline void require(bool cond, const char* what) {
  if (!cond) throw ValidationError(what);
}

}  // namespace detail

}  // namespace synshadow
