#pragma once

#include <stdexcept>
#include <string>

namespace blindid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Simulation produced a non-finite value.
class OverflowError : public Error {
 public:
  using Error::Error;
};

/// Psi_a is rank deficient, so the dynamics cannot be separated from the
/// inputs. Raised by every operation that needs full column rank.
class IdentifiabilityError : public Error {
 public:
  using Error::Error;
};

/// A brute-force enumeration would exceed its evaluation budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or malformed input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace blindid
