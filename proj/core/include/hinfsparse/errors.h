#pragma once

#include <stdexcept>
#include <string>

namespace hinfsparse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (plant vs. gain, region vs. weights, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A dense factorization or eigen-solver failed, or a solver returned garbage.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The synthesis LMIs have no solution with the requested strictness margin.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::string solver_status, double achieved_margin);
  const std::string& solver_status() const { return solver_status_; }
  double achieved_margin() const { return achieved_margin_; }

 private:
  std::string solver_status_;
  double achieved_margin_;
};

/// The solver reported success but the independent H-infinity check did not
/// confirm the certified level.
class VerificationFailed : public Error {
 public:
  VerificationFailed(const std::string& what, double achieved_norm);
  double achieved_norm() const { return achieved_norm_; }

 private:
  double achieved_norm_;
};

/// theta == 0 or a singular radius: the greedy constraint matrix is not
/// invertible, so no entry can be eliminated.
class DegenerateRegion : public Error {
 public:
  using Error::Error;
};

/// The 2x2 capacitance matrix of a rank-two update is singular.
class SingularUpdate : public Error {
 public:
  using Error::Error;
};

}  // namespace hinfsparse
