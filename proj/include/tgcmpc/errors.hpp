#pragma once

#include <stdexcept>
#include <string>

namespace tgcmpc {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN or infinite entries where finite numbers are required.
class NumericInputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation (indefinite
/// matrix where PSD is required, negative scale, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Uncertainty block with spectral norm above one.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an API precondition (missing factorization, non-optimal
/// solution passed where an optimal one is needed, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An offline synthesis has no solution for the given data.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// The conic backend failed to produce a usable answer.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Index past the end of a finite sequence (fixed disturbance sequences).
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem file or command-line configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgcmpc
