#pragma once

#include <stdexcept>
#include <string>

namespace domlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Point outside the reference domain or perturbation size outside the configured range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// |Jh| below the nonsingularity threshold; the inverse transpose b is undefined.
class SingularJacobian : public Error {
 public:
  using Error::Error;
};

/// Sampling grid or mesh too coarse for the coefficient oscillation wavelength.
class UnderResolved : public Error {
 public:
  using Error::Error;
};

/// Iteration cap reached (eigensolver, Lanczos, Newton) or singular iteration matrix.
class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

/// Non-finite state during time integration.
class BlowUp : public Error {
 public:
  BlowUp(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A certification gate (dissipativity, Perron sign, hyperbolicity) did not pass.
class GateFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace domlab
