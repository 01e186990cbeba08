#include "axiscal/geometry.hpp"

#include <numbers>

#include <Eigen/Dense>

namespace axiscal {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w + 0.0;  // no negative zero
}

Pose6 wrapped(const Pose6& p) {
  return Pose6{p.x, p.y, p.z, wrap_angle(p.phi), wrap_angle(p.theta), wrap_angle(p.psi)};
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  *this = from_matrix(m);
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) throw InvalidArgument("rigid transform has non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw InvalidArgument("rigid transform bottom row must be [0 0 0 1]");
  }
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kTolerance) throw InvalidArgument("rotation block is not orthonormal");
  if (std::abs(r.determinant() - 1.0) > kTolerance) throw InvalidArgument("rotation block must have determinant +1");
  return RigidTransform(m, Unchecked{});
}

RigidTransform RigidTransform::translation(double x, double y, double z) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 3) = x;
  m(1, 3) = y;
  m(2, 3) = z;
  return RigidTransform(m, Unchecked{});
}

RigidTransform RigidTransform::rotation(const Eigen::Matrix3d& r) {
  return RigidTransform(r, Eigen::Vector3d::Zero());
}

RigidTransform RigidTransform::inverse() const { return RigidTransform(rigid_inverse<double>(m_), Unchecked{}); }

Eigen::Vector3d RigidTransform::apply(const Eigen::Vector3d& p) const {
  return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>();
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  Eigen::Matrix4d m = m_ * other.m_;
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return RigidTransform(m, Unchecked{});
}

RigidTransform pose_to_transform(const Pose6& p) {
  if (!p.vector().allFinite()) throw InvalidArgument("pose has non-finite fields");
  Eigen::Matrix4d m = pose_matrix(p);
  m.row(3) << 0.0, 0.0, 0.0, 1.0;
  return RigidTransform::from_matrix(m);
}

PoseDecomposition decompose_transform(const RigidTransform& t) {
  const Eigen::Matrix3d r = t.rotation();
  const Eigen::Vector3d p = t.translation();
  PoseDecomposition out;
  out.pose.x = p.x();
  out.pose.y = p.y();
  out.pose.z = p.z();

  const double cos_pitch = std::hypot(r(0, 0), r(1, 0));
  const double pitch = std::atan2(-r(2, 0), cos_pitch);
  if (std::abs(std::abs(pitch) - std::numbers::pi / 2.0) < 1e-9) {
    // Only psi - sign(pitch)*phi is observable; pin roll to zero.
    out.gimbal_lock = true;
    out.pose.phi = 0.0;
    out.pose.theta = pitch > 0.0 ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
    out.pose.psi = std::atan2(-r(0, 1), r(1, 1));
  } else {
    out.pose.phi = std::atan2(r(2, 1), r(2, 2));
    out.pose.theta = pitch;
    out.pose.psi = std::atan2(r(1, 0), r(0, 0));
  }
  out.pose = wrapped(out.pose);
  return out;
}

Pose6 transform_to_pose(const RigidTransform& t) { return decompose_transform(t).pose; }

PinholeCamera PinholeCamera::make(double fx, double fy, double cx, double cy, int width, int height) {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (!std::isfinite(fx) || !std::isfinite(fy) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidArgument("camera intrinsics must be finite");
  }
  return PinholeCamera{fx, fy, cx, cy, width, height};
}

Line2D Line2D::from_slope_intercept(double m, double b) {
  const double n = std::sqrt(m * m + 1.0);
  return Line2D(-m / n, 1.0 / n, -b / n);
}

Line2D Line2D::from_normal(double nx, double ny, double c) {
  const double n = std::hypot(nx, ny);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("line normal must be non-zero and finite");
  nx /= n;
  ny /= n;
  c /= n;
  if (ny < 0.0 || (ny == 0.0 && nx < 0.0)) {
    nx = -nx;
    ny = -ny;
    c = -c;
  }
  return Line2D(nx, ny, c);
}

double Line2D::slope() const {
  if (!has_slope_intercept()) throw GeometryError("line is vertical; slope-intercept form undefined");
  return -nx_ / ny_;
}

double Line2D::intercept() const {
  if (!has_slope_intercept()) throw GeometryError("line is vertical; slope-intercept form undefined");
  return -c_ / ny_;
}

Line2D fit_line_2d(std::span<const Eigen::Vector2d> points) {
  if (points.size() < 2) throw InvalidArgument("line fit needs at least two points");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());

  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  double scale = 0.0;
  for (const auto& p : points) {
    const Eigen::Vector2d d = p - mean;
    scatter += d * d.transpose();
    scale = std::max(scale, p.cwiseAbs().maxCoeff());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
  const double spread = eig.eigenvalues()(1);
  if (!(spread > 1e-24 * (1.0 + scale * scale))) {
    throw DegenerateConfiguration("line fit points are coincident");
  }
  const Eigen::Vector2d normal = eig.eigenvectors().col(0);
  return Line2D::from_normal(normal.x(), normal.y(), -normal.dot(mean));
}

}  // namespace axiscal
