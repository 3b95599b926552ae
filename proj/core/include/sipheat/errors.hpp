#pragma once

#include <stdexcept>
#include <string>

namespace sipheat {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON/CSV). Message carries file and field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A domain invariant does not hold (bad stack, bad map, bad scenario).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (missing file, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Solver-level failure (singular system, ...). Non-convergence is the
/// derived NonConvergenceError in solver.hpp, which carries the best iterate.
class SolveError : public Error {
 public:
  using Error::Error;
};

}  // namespace sipheat
