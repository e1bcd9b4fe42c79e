#pragma once

#include <stdexcept>
#include <string>

namespace hcube {

// Caller broke a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Rejected configuration or parameter override.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An internal structural invariant failed. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An edge was read before it was exposed, or exposed by the wrong stage.
class DisciplineError : public InvariantError {
 public:
  using InvariantError::InvariantError;
};

// Malformed input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw InvariantError(what);
}

}  // namespace hcube
