#pragma once

#include <stdexcept>
#include <string>

namespace homoglab {

/// Invalid input: a spec, configuration or argument that violates its contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not produce a trustworthy result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver stopped at its iteration budget.
class NotConvergedError : public NumericalError {
 public:
  NotConvergedError(long iterations, double residual)
      : NumericalError("not converged after " + std::to_string(iterations) +
                       " iterations (relative residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  long iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  long iterations_;
  double residual_;
};

}  // namespace homoglab
