#pragma once

#include <stdexcept>
#include <string>

namespace usd {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (dimension mismatch, bad priors, ...).
class InvalidInput : public Error {
  public:
    using Error::Error;
};

/// The signal states are (numerically) linearly dependent; no unambiguous
/// discrimination measurement exists for them.
class LinearDependenceError : public Error {
  public:
    using Error::Error;
};

/// An operation was requested for an unsupported problem dimension.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Two internal routes that must agree disagreed beyond tolerance.
class InternalConsistencyError : public Error {
  public:
    using Error::Error;
};

}  // namespace usd
