#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermo {

// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input that violates a documented precondition (bad DoS table, T <= 0, ...).
class ValidationError : public Error {
public:
  using Error::Error;
};

// Inversion of a (numerically) vanishing quantity, e.g. 1/G at a zero of G.
class SingularInversion : public Error {
public:
  using Error::Error;
};

// A conservation law or sum rule checked at runtime failed.
class IntegrityError : public Error {
public:
  using Error::Error;
};

// Requested value lies outside what the data can support.
class RangeError : public Error {
public:
  using Error::Error;
};

// Iterative procedure failed to converge; keeps the residual history.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}

  const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
  std::vector<double> residuals_;
};

// Lanczos recursion lost orthogonality at the working precision.
class PrecisionError : public Error {
public:
  using Error::Error;
};

// Probe is fully polarized: Fisher information undefined at this precision.
class SaturationError : public Error {
public:
  using Error::Error;
};

} // namespace thermo
