#pragma once

#include <stdexcept>
#include <string>

namespace desense {

/// Base class for all failures raised by the filtering library.
class FilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input had the wrong shape (vector length or matrix dimensions).
class DimensionError : public FilterError {
 public:
  using FilterError::FilterError;
};

/// A linear system was numerically singular (condition estimate above limit).
class SingularMatrixError : public FilterError {
 public:
  SingularMatrixError(const std::string& what, double condition_estimate)
      : FilterError(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Arithmetic produced a non-finite value; `epoch` identifies where.
class NumericFailureError : public FilterError {
 public:
  NumericFailureError(const std::string& what, double epoch)
      : FilterError(what), epoch_(epoch) {}
  /// Discrete epoch index, or the integration time stamp for continuous runs.
  double epoch() const { return epoch_; }

 private:
  double epoch_;
};

/// Invalid experiment or model configuration (bad JSON, non-PSD weights, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Monte-Carlo experiment could not produce any usable case.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace desense
