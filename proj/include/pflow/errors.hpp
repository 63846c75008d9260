#pragma once

#include <stdexcept>
#include <string>

namespace pflow {

// Two families: DataError (bad files, manifests, mismatched inputs) and
// NumericError (the math cannot produce an answer). The CLI maps them to
// distinct exit codes.

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a geometric conversion (e.g. d <= 0).
class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class GenerationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class RenderError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Metric is undefined for the given inputs (empty evaluation mask).
class MetricError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace pflow
