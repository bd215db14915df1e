#pragma once
// Failure taxonomy. Every throwing path in the library uses one of these so
// the C API can map exceptions onto stable status codes.

#include <stdexcept>
#include <string>
#include <vector>

namespace nst {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric not positive definite / not invertible where required.
class SingularMetric : public Error {
 public:
  using Error::Error;
};

// Frame with f <= 0 or singular spatial block.
class DegenerateFrame : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

// Trajectory left the declared domain box (e.g. fell into a potential
// singularity that the box excludes).
class DomainExit : public Error {
 public:
  using Error::Error;
};

// Adaptive integrator could not meet its tolerances.
class StepFailure : public Error {
 public:
  using Error::Error;
};

class NonPositiveTimeScale : public Error {
 public:
  using Error::Error;
};

// Measured orbit energy disagrees with the declared transform energy.
class EnergyMismatch : public Error {
 public:
  using Error::Error;
};

// Resolvent probe energy not strictly below the discrete spectrum.
class SpectrumOverlap : public Error {
 public:
  using Error::Error;
};

class SingularLinearSolve : public Error {
 public:
  using Error::Error;
};

class NoBoundState : public Error {
 public:
  using Error::Error;
};

// Malformed input document (bad JSON, wrong value kinds).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem or environment trouble (output directory, unreadable file).
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

// Scenario-level validation; collects every violated precondition, not just
// the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string s = "scenario validation failed:";
    for (const auto& i : issues) s += "\n  - " + i;
    return s;
  }
  std::vector<std::string> issues_;
};

}  // namespace nst
