#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace sensched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent dimensions or malformed problem data.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Malformed problem file; the message carries the offending key path.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// F X + X F^T + Q = 0 has no unique solution (λ_i(F) + λ_j(F) ≈ 0).
class SingularSylvester : public Error {
 public:
  using Error::Error;
};

class NoStabilizingSolution : public Error {
 public:
  using Error::Error;
};

class SolverDiverged : public Error {
 public:
  SolverDiverged(const std::string& what, std::vector<double> residuals)
      : Error(what), residual_history(std::move(residuals)) {}
  std::vector<double> residual_history;
};

class DegenerateSensor : public Error {
 public:
  using Error::Error;
};

class IntegrationBlowup : public Error {
 public:
  IntegrationBlowup(const std::string& what, double t) : Error(what), time(t) {}
  double time;
};

class PeriodicNonConvergence : public Error {
 public:
  using Error::Error;
};

class IndexDegenerate : public Error {
 public:
  using Error::Error;
};

class UnboundedDual : public Error {
 public:
  using Error::Error;
};

class GradientUnavailable : public Error {
 public:
  using Error::Error;
};

class InfeasibleAssignment : public Error {
 public:
  using Error::Error;
};

class NoFeasibleStart : public Error {
 public:
  using Error::Error;
};

class DecompositionStalled : public Error {
 public:
  DecompositionStalled(const std::string& what, double residual_mass)
      : Error(what), residual(residual_mass) {}
  double residual;
};

}  // namespace sensched
