#pragma once

#include <stdexcept>
#include <string>

namespace taulasso {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument values (out-of-range tuning constants, negative penalties, ...).
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (empty vectors, shape mismatches, non-finite entries).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// The combined psi-weight denominator collapsed (all residuals in the flat
/// region of psi0).
class DegenerateWeightError : public Error {
 public:
  using Error::Error;
};

/// A vector has no spread, so no positive scale exists.
class DegenerateScaleError : public Error {
 public:
  explicit DegenerateScaleError(const std::string& msg, int column = -1)
      : Error(msg), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

/// Pilot estimate unusable (all-zero with a zero epsilon floor).
class DegeneratePilotError : public Error {
 public:
  using Error::Error;
};

/// The iterative solver produced a non-finite objective or ran out of restarts.
class SolverDivergenceError : public Error {
 public:
  using Error::Error;
};

/// An expectation matrix in the influence computation is numerically singular.
class SingularExpectationError : public Error {
 public:
  explicit SingularExpectationError(const std::string& msg, double condition)
      : Error(msg), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// The pilot's active set does not cover the adaptive estimator's active set.
class InconsistentSupportError : public Error {
 public:
  using Error::Error;
};

/// CSV parse failure; carries 1-based line/column diagnostics.
class CsvError : public Error {
 public:
  CsvError(const std::string& msg, int line, int column)
      : Error(msg), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace taulasso
