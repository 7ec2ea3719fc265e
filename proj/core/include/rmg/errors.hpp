#pragma once

#include <stdexcept>
#include <string>

namespace rmg {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched vector/table dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside its admissible domain (eta <= 0, empty grids, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A distribution puts mass on an action its reference assigns zero mass.
class SupportError : public Error {
 public:
  using Error::Error;
};

// Problem size exceeds a configured enumeration cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// An iterative solver exhausted its iteration budget. Carries the last
// certified exploitability so callers can decide whether to accept it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_exploitability)
      : Error(what), last_exploitability_(last_exploitability) {}
  double last_exploitability() const { return last_exploitability_; }

 private:
  double last_exploitability_;
};

// A quantity that is non-negative by construction came out negative beyond
// numerical noise; indicates a logic bug rather than bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rmg
