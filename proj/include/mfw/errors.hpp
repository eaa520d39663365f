#pragma once

#include <stdexcept>
#include <string>

#include "mfw/point.hpp"

namespace mfw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or measure falls outside the box it is declared on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Every atom was pruned away.
class DegenerateMeasureError : public Error {
 public:
  using Error::Error;
};

/// The instance lacks an oracle that the caller needs (exact influence,
/// stochastic samples, known optimum, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// An evaluator returned a non-finite value.
class OracleError : public Error {
 public:
  OracleError(const std::string& what, Point where)
      : Error(what + " at " + to_string(where)), point_(where) {}
  const Point& point() const noexcept { return point_; }

 private:
  Point point_;
};

/// Information matrix is rank-deficient; the objective is +inf there.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class InnerSolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfw
