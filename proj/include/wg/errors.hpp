#pragma once

#include <stdexcept>
#include <string>

namespace wg {

// Base class for all engine failures. Subcommands map these to exit code 3,
// configuration problems to exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

// geometry
struct InvalidGeometry : Error {
  using Error::Error;
};
struct RefinementTooCoarse : Error {
  using Error::Error;
};
struct ParseError : Error {
  int line;
  ParseError(const std::string& msg, int line_)
      : Error(msg + " (line " + std::to_string(line_) + ")"), line(line_) {}
};
struct InvariantViolation : Error {
  std::string invariant;
  InvariantViolation(const std::string& which, const std::string& msg)
      : Error("mesh invariant '" + which + "' violated: " + msg), invariant(which) {}
};

// fem
struct DegenerateTriangle : Error {
  using Error::Error;
};
struct SolverBreakdown : Error {
  using Error::Error;
};
struct NotConverged : Error {
  using Error::Error;
};
struct SingularSystem : Error {
  using Error::Error;
};

// modes / ndmap
struct BranchPointSingularity : Error {
  using Error::Error;
};
struct EigenvalueCollision : Error {
  using Error::Error;
};

// scattering
struct AmbiguousKernel : Error {
  double gap;
  AmbiguousKernel(const std::string& msg, double gap_) : Error(msg), gap(gap_) {}
};
struct SingularTau : Error {
  using Error::Error;
};
struct SingularExtraction : Error {
  double residual;
  SingularExtraction(const std::string& msg, double r) : Error(msg), residual(r) {}
};
struct DerivativeIllConditioned : Error {
  double condition;
  DerivativeIllConditioned(const std::string& msg, double c) : Error(msg), condition(c) {}
};

// resonance
struct QuadratureNotConverged : Error {
  using Error::Error;
};
struct NodeSingular : Error {
  using Error::Error;
};
struct DriftedOutOfBox : Error {
  using Error::Error;
};
struct ExtrapolationUnstable : Error {
  using Error::Error;
};

}  // namespace wg
