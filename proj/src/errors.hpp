#pragma once

#include <stdexcept>
#include <string>

namespace qbr {

// Error taxonomy for the whole library. Each class maps 1:1 onto a C API
// status code; messages carry the offending values so callers can report
// actionable diagnostics.

class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Argument outside the mathematical domain of an operation.
class domain_error : public error {
 public:
  using error::error;
};

// Quadrature (or another approximation) could not reach its accuracy target.
class accuracy_error : public error {
 public:
  accuracy_error(const std::string& msg, double estimate, double error_bound)
      : error(msg), estimate(estimate), error_bound(error_bound) {}
  double estimate;
  double error_bound;
};

// Iteration limit reached before the convergence tolerance.
class convergence_error : public error {
 public:
  convergence_error(const std::string& msg, double residual = 0.0)
      : error(msg), residual(residual) {}
  double residual;
};

// Estimator diverged to the boundary of the parameter space.
class boundary_error : public error {
 public:
  boundary_error(const std::string& msg, int coordinate, int direction)
      : error(msg), coordinate(coordinate), direction(direction) {}
  int coordinate;
  int direction;  // +1 upper boundary, -1 lower boundary
};

// No sign change found in the scanned range of a root search.
class no_root_error : public error {
 public:
  no_root_error(const std::string& msg, double scan_lo, double scan_hi)
      : error(msg), scan_lo(scan_lo), scan_hi(scan_hi) {}
  double scan_lo;
  double scan_hi;
};

// Singular or non-positive-definite information where a solve is required.
class singular_error : public error {
 public:
  using error::error;
};

// Invalid model/simulation/CLI configuration.
class config_error : public error {
 public:
  using error::error;
};

// File and CSV ingestion problems.
class io_error : public error {
 public:
  using error::error;
};

}  // namespace qbr
