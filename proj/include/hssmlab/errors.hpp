#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "hssmlab/trace.hpp"

namespace hssmlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class RangeViolation : public Error {
 public:
  using Error::Error;
};

class DoubleRelease : public Error {
 public:
  using Error::Error;
};

/// An input file could not be opened.
class MissingInput : public Error {
 public:
  using Error::Error;
};

class DegenerateTraining : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// A rescale was required on a ciphertext already at level 0.
///
/// Circuits annotate the exception with the failing stage, the 1-based step
/// (0 outside the sequence loop) and the trace recorded up to the failure.
class LevelExhausted : public Error {
 public:
  explicit LevelExhausted(const std::string& what) : Error(what) {}

  int step() const { return step_; }
  const std::string& stage() const { return stage_; }
  const StepTrace& partial_trace() const { return trace_; }

  void annotate(int step, std::string stage, StepTrace trace) {
    step_ = step;
    stage_ = std::move(stage);
    trace_ = std::move(trace);
  }

 private:
  int step_ = 0;
  std::string stage_;
  StepTrace trace_;
};

/// Malformed line in a text input; `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace hssmlab
