#include "axiscal/conics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace axiscal {

Conic::Conic(const Vector6d& coefficients) : k_(coefficients) {
  if (!k_.allFinite()) throw InvalidArgument("conic coefficients must be finite");
  if (k_.head<3>().cwiseAbs().maxCoeff() == 0.0) throw InvalidArgument("conic has no quadratic part");
  k_.normalize();
  const double lead = k_(0) != 0.0 ? k_(0) : (k_(1) != 0.0 ? k_(1) : k_(2));
  if (lead < 0.0) k_ = -k_;
}

double Conic::evaluate(const Eigen::Vector2d& p) const {
  const double x = p.x(), y = p.y();
  return k_(0) * x * x + k_(1) * x * y + k_(2) * y * y + k_(3) * x + k_(4) * y + k_(5);
}

Eigen::Vector2d Conic::gradient(const Eigen::Vector2d& p) const {
  const double x = p.x(), y = p.y();
  return {2.0 * k_(0) * x + k_(1) * y + k_(3), k_(1) * x + 2.0 * k_(2) * y + k_(4)};
}

Conic fit_ellipse_direct(std::span<const Eigen::Vector2d> points) {
  const std::size_t n = points.size();
  if (n < 6) throw InvalidArgument("ellipse fit needs at least 6 points, got " + std::to_string(n));

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(n);
  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - mean).norm();
  mean_dist /= static_cast<double>(n);
  if (!(mean_dist > 0.0) || !std::isfinite(mean_dist)) throw DegenerateConfiguration("ellipse fit points coincide");
  const double s = std::numbers::sqrt2 / mean_dist;

  // Scatter blocks: quadratic terms [x^2 xy y^2], linear terms [x y 1].
  Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s3 = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const double x = (p.x() - mean.x()) * s;
    const double y = (p.y() - mean.y()) * s;
    const Eigen::Vector3d q(x * x, x * y, y * y);
    const Eigen::Vector3d l(x, y, 1.0);
    s1 += q * q.transpose();
    s2 += q * l.transpose();
    s3 += l * l.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> s3_eig(s3, Eigen::EigenvaluesOnly);
  if (!(s3_eig.eigenvalues()(0) > 1e-12 * s3_eig.eigenvalues()(2))) {
    throw DegenerateConfiguration("ellipse fit scatter is rank deficient (collinear points)");
  }
  const Eigen::Matrix3d t = -s3.ldlt().solve(s2.transpose());
  const Eigen::Matrix3d m = s1 + s2 * t;
  // Premultiply by the inverse of the 3x3 constraint block [[0 0 2] [0 -1 0] [2 0 0]].
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;

  Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  int best = -1;
  double best_value = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d v = eig.eigenvectors().col(i).real();
    const double constraint = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (constraint <= 0.0) continue;
    const double value = std::abs(eig.eigenvalues()(i).real());
    if (best < 0 || value < best_value) {
      best = i;
      best_value = value;
    }
  }
  if (best < 0) throw DegenerateConfiguration("ellipse fit found no elliptical solution");

  const Eigen::Vector3d quad = eig.eigenvectors().col(best).real();
  const Eigen::Vector3d lin = t * quad;

  // Undo x' = s (x - mx), y' = s (y - my).
  const double a = quad(0), b = quad(1), c = quad(2), d = lin(0), e = lin(1), f = lin(2);
  const double mx = mean.x(), my = mean.y(), s2c = s * s;
  Vector6d k;
  k(0) = a * s2c;
  k(1) = b * s2c;
  k(2) = c * s2c;
  k(3) = -2.0 * a * s2c * mx - b * s2c * my + d * s;
  k(4) = -2.0 * c * s2c * my - b * s2c * mx + e * s;
  k(5) = s2c * (a * mx * mx + b * mx * my + c * my * my) - s * (d * mx + e * my) + f;
  return Conic(k);
}

EllipseParams conic_params(const Conic& c) {
  if (!c.is_ellipse()) throw GeometryError("conic is not an ellipse");
  Eigen::Matrix2d q;
  q << c.a(), c.b() / 2.0, c.b() / 2.0, c.c();
  const Eigen::Vector2d center = q.ldlt().solve(Eigen::Vector2d(-c.d() / 2.0, -c.e() / 2.0));
  const double f0 = c.f() + (c.d() * center.x() + c.e() * center.y()) / 2.0;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(q);
  const double l_small = eig.eigenvalues()(0);
  const double l_large = eig.eigenvalues()(1);
  const double major_sq = -f0 / l_small;
  const double minor_sq = -f0 / l_large;
  if (!(major_sq > 0.0) || !(minor_sq > 0.0)) throw GeometryError("conic is an imaginary ellipse");

  EllipseParams out;
  out.center = center;
  out.semi_major = std::sqrt(major_sq);
  out.semi_minor = std::sqrt(minor_sq);
  const Eigen::Vector2d dir = eig.eigenvectors().col(0);
  double angle = std::atan2(dir.y(), dir.x());
  if (angle <= -std::numbers::pi / 2.0) angle += std::numbers::pi;
  if (angle > std::numbers::pi / 2.0) angle -= std::numbers::pi;
  out.orientation = angle;
  return out;
}

double signed_sampson_distance(const Conic& c, const Eigen::Vector2d& p) {
  const Eigen::Vector2d g = c.gradient(p);
  const double gn = g.norm();
  const double scale = (std::abs(c.a()) + std::abs(c.b()) + std::abs(c.c())) * (std::abs(p.x()) + std::abs(p.y())) +
                       std::abs(c.d()) + std::abs(c.e());
  if (!(gn > 1e-12 * scale) || gn == 0.0) throw GeometryError("conic gradient vanishes at the query point");
  return c.evaluate(p) / gn;
}

double sampson_distance(const Conic& c, const Eigen::Vector2d& p) { return std::abs(signed_sampson_distance(c, p)); }

}  // namespace axiscal
