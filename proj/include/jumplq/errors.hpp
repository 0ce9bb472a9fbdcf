#pragma once

#include <stdexcept>
#include <string>

namespace jumplq {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument is malformed (wrong dimension, out of range, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// An input file is unreadable or not syntactically well formed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input data violates a documented structural invariant (negative curvature
// weight, non-PSD cost matrix, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An iterative method exhausted its iteration budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// An integrated solution left its a-priori admissible region.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A request would exceed a hard storage limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// The time step is too coarse for the scheme's contraction requirement.
class StepSizeError : public Error {
 public:
  using Error::Error;
};

// A declared certificate contradicts the object it describes.
class CertificateError : public Error {
 public:
  using Error::Error;
};

// The market admits no finite variance minimizer for the requested target.
class DegenerateMarketError : public Error {
 public:
  using Error::Error;
};

}  // namespace jumplq
