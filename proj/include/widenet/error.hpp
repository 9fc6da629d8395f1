#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace widenet {

enum class ErrorKind {
  invalid_argument,
  convergence_failure,
  numeric_failure,
  unsupported_activation,
  invariant_violation,
  degenerate_input,
  divergence,
  format_error,
  insufficient_data,
  io_error,
  usage_error,
};

std::string_view to_string(ErrorKind kind);

/// Base error for every failure raised by the library. The kind drives the
/// CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Power iteration ran out of iterations. Carries the last estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_estimate,
                   std::size_t iterations)
      : Error(ErrorKind::convergence_failure, message),
        last_estimate_(last_estimate),
        iterations_(iterations) {}

  double last_estimate() const noexcept { return last_estimate_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double last_estimate_;
  std::size_t iterations_;
};

/// Gradient descent produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, std::size_t step)
      : Error(ErrorKind::divergence, message), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::invalid_argument, message);
}

}  // namespace widenet
