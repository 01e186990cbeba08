#pragma once

#include <span>

#include <Eigen/Core>

#include "axiscal/errors.hpp"

namespace axiscal {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// A*x^2 + B*x*y + C*y^2 + D*x + E*y + F = 0 with a unit-norm coefficient
/// vector. Sign is fixed so that the first non-zero of (A, B, C) is positive.
class Conic {
 public:
  /// Normalizes `coefficients`; throws InvalidArgument on a zero quadratic part.
  explicit Conic(const Vector6d& coefficients);

  const Vector6d& coefficients() const { return k_; }
  double a() const { return k_(0); }
  double b() const { return k_(1); }
  double c() const { return k_(2); }
  double d() const { return k_(3); }
  double e() const { return k_(4); }
  double f() const { return k_(5); }

  bool is_ellipse() const { return k_(1) * k_(1) - 4.0 * k_(0) * k_(2) < 0.0; }

  double evaluate(const Eigen::Vector2d& p) const;
  Eigen::Vector2d gradient(const Eigen::Vector2d& p) const;

 private:
  Vector6d k_;
};

/// Direct least-squares ellipse fit under 4AC - B^2 = 1 (Halir-Flusser split
/// of Fitzgibbon's generalized eigenproblem), on mean-centred, isotropically
/// scaled points.
/// Throws InvalidArgument for fewer than 6 points and DegenerateConfiguration
/// for rank-deficient scatter (e.g. collinear points).
Conic fit_ellipse_direct(std::span<const Eigen::Vector2d> points);

struct EllipseParams {
  Eigen::Vector2d center;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  /// Direction of the major axis, in (-pi/2, pi/2].
  double orientation = 0.0;
};

/// Throws GeometryError unless the conic is a real ellipse.
EllipseParams conic_params(const Conic& c);

/// |Q(p)| / |grad Q(p)|. Throws GeometryError when the gradient vanishes.
double sampson_distance(const Conic& c, const Eigen::Vector2d& p);

/// Signed Q(p) / |grad Q(p)|; same magnitude as sampson_distance but smooth
/// across the curve, which is what a least-squares residual needs.
double signed_sampson_distance(const Conic& c, const Eigen::Vector2d& p);

}  // namespace axiscal
