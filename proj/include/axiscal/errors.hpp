#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace axiscal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad sizes, too few points, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Observation geometry that cannot be evaluated, e.g. a point behind the camera.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A point projected from measurement `measurement_index` fell behind the camera.
class BehindCameraError : public GeometryError {
 public:
  BehindCameraError(std::size_t measurement_index, const std::string& what)
      : GeometryError(what), measurement_index_(measurement_index) {}
  std::size_t measurement_index() const { return measurement_index_; }

 private:
  std::size_t measurement_index_;
};

/// Underdetermined problem: rank-deficient normal equations, degenerate scatter,
/// or a measurement set that fails validation.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// No optimizer run reached a usable solution. Carries the best residual seen.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const { return best_residual_; }

 private:
  double best_residual_;
};

/// Malformed input file or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace axiscal
