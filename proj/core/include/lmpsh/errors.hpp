#pragma once

#include <stdexcept>
#include <string>

namespace lmpsh {

// Bad user configuration: parameter out of range, unknown option value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a structural invariant (bad CSV, empty risk set, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Optimization or linear-algebra failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficientError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lmpsh
