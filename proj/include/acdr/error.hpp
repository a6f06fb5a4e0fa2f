#pragma once

#include <stdexcept>
#include <string>

namespace acdr {

/// Invalid parameters or option values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be parsed or failed schema checks.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Robust tightening leaves an empty comfort band, or no schedule satisfies the constraints.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A schedule violates the model constraints.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExternalSolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acdr
