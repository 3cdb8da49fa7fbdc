#pragma once

#include <stdexcept>
#include <string>

namespace fractalmix {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
  ok = 0,
  usage = 2,
  capacity = 3,
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::usage; }
};

// Invalid input: malformed spec strings, violated graph invariants,
// arguments outside their domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The graph itself is unusable (disconnected, self-loops, ...).
class StructuralError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A configured size/memory cap would be exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::capacity; }
};

// Iterative solver or eigen-iteration did not reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace fractalmix
