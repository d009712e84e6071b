#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svdd {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "error"; }
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "invalid_argument"; }
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "dimension_mismatch"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "io_error"; }
};

// Malformed CSV content. Row and column are 1-based and count the header row.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what), row_(row), column_(column) {}
  const char* code() const noexcept override { return "parse_error"; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// n * C < 1: no alpha vector can satisfy both the box and the sum constraint.
class InfeasibleProblem : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "infeasible"; }
};

// Solver ran out of iterations. Carries the state of the last iterate.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, std::size_t iterations, double violation,
                 double objective)
      : Error(what), iterations_(iterations), violation_(violation), objective_(objective) {}
  const char* code() const noexcept override { return "non_convergence"; }
  std::size_t iterations() const noexcept { return iterations_; }
  double violation() const noexcept { return violation_; }
  double objective() const noexcept { return objective_; }

 private:
  std::size_t iterations_;
  double violation_;
  double objective_;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "singular_system"; }
};

// The smoothed curve has no interior local maximum on the evaluation grid.
class NoInteriorMaximum : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "no_interior_maximum"; }
};

// The confidence band never contains zero on the evaluation grid.
class NoZeroCrossing : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "no_zero_crossing"; }
};

}  // namespace svdd
