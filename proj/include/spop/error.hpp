#pragma once

#include <stdexcept>
#include <string>

namespace spop {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad variable indices, unknown fields, support violations.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Vector/matrix sizes that do not agree with the problem.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configured size cap (PSD dimension, Schmüdgen products) was exceeded.
class CapError : public Error {
 public:
  using Error::Error;
};

}  // namespace spop
