#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace difffactor {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad grid size, dimension mismatch, non-finite data.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A map left the regime where it is a near-identity diffeomorphism
/// (Jacobian sign lost, frame degenerate, outside a solver basin).
class BasinError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver gave up. Carries the residual history it produced.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}

  const std::vector<double>& history() const { return history_; }
  double last_residual() const { return history_.empty() ? 0.0 : history_.back(); }

 private:
  std::vector<double> history_;
};

/// Structured parse error for JSON payloads (fields, diffeos, certificates).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace difffactor
