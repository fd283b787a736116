#pragma once

#include <stdexcept>
#include <string>

namespace webcolor {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input document (bad JSON, wrong field type, bad arity).
struct ParseError : Error {
  using Error::Error;
};

// Structurally well-formed data that breaks a domain invariant.
struct ValidationError : Error {
  using Error::Error;
};

// Tensor shape mismatch; message names the op and the shapes involved.
struct ShapeError : Error {
  using Error::Error;
};

// API misuse (wrong call order, missing preconditions).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite values or failed numeric convergence.
struct NumericError : Error {
  using Error::Error;
};

// Filesystem failures.
struct IoError : Error {
  using Error::Error;
};

}  // namespace webcolor
