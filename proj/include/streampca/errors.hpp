#pragma once

#include <stdexcept>
#include <string>

namespace streampca {

// Base class for every failure the library raises on purpose. Callers that
// want a single catch site can catch this; the CLI maps subclasses to exit
// codes (config/model problems -> 2, I/O problems -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimensions, non-finite entries, empty input,
// out-of-range scalars.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An update direction collapsed below 1e-14 in norm. The previous iterate is
// still valid; the step never returns NaN.
class DegenerateUpdate : public Error {
 public:
  using Error::Error;
};

// A named model or hyperparameter inequality failed. The message always
// contains the inequality that failed.
class ModelViolation : public Error {
 public:
  using Error::Error;
};

// The requested derivation needs more samples than the stream provides
// (block length exceeds N, or no feasible block/horizon split exists).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Config or stream file could not be parsed. Carries the 1-based line number
// (0 when the problem is not attributable to a single line).
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line)
      : Error(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// A report was asked to serialize a non-finite value; the message names the
// offending field.
class DiagnosticsError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (open/read/write); the message carries the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace streampca
