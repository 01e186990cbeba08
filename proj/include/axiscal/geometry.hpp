#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "axiscal/errors.hpp"

namespace axiscal {

template <typename T>
using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T>
using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T>
using Mat4 = Eigen::Matrix<T, 4, 4>;

inline double real_part(double v) { return v; }
inline double real_part(const std::complex<double>& v) { return v.real(); }

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// x, y, z in meters; phi, theta, psi (roll, pitch, yaw) in radians.
/// Rotation convention: R = Rz(psi) * Ry(theta) * Rx(phi).
template <typename T>
struct BasicPose6 {
  T x{}, y{}, z{}, phi{}, theta{}, psi{};

  Eigen::Matrix<T, 6, 1> vector() const {
    Eigen::Matrix<T, 6, 1> v;
    v << x, y, z, phi, theta, psi;
    return v;
  }
  static BasicPose6 from_vector(const Eigen::Matrix<T, 6, 1>& v) {
    return BasicPose6{v(0), v(1), v(2), v(3), v(4), v(5)};
  }
};

using Pose6 = BasicPose6<double>;

/// Copy of `p` with all three angles wrapped to (-pi, pi].
Pose6 wrapped(const Pose6& p);

template <typename T>
Mat3<T> rotation_x(const T& a) {
  using std::cos;
  using std::sin;
  Mat3<T> r;
  r << T(1), T(0), T(0), T(0), cos(a), -sin(a), T(0), sin(a), cos(a);
  return r;
}

template <typename T>
Mat3<T> rotation_y(const T& a) {
  using std::cos;
  using std::sin;
  Mat3<T> r;
  r << cos(a), T(0), sin(a), T(0), T(1), T(0), -sin(a), T(0), cos(a);
  return r;
}

template <typename T>
Mat3<T> rotation_z(const T& a) {
  using std::cos;
  using std::sin;
  Mat3<T> r;
  r << cos(a), -sin(a), T(0), sin(a), cos(a), T(0), T(0), T(0), T(1);
  return r;
}

/// Homogeneous matrix of a pose. Generic over the scalar so the same code path
/// can be evaluated on complex-perturbed parameters.
template <typename T>
Mat4<T> pose_matrix(const BasicPose6<T>& p) {
  Mat4<T> m = Mat4<T>::Identity();
  m.template topLeftCorner<3, 3>() = rotation_z(p.psi) * rotation_y(p.theta) * rotation_x(p.phi);
  m(0, 3) = p.x;
  m(1, 3) = p.y;
  m(2, 3) = p.z;
  return m;
}

/// Inverse of a rigid homogeneous matrix. Uses a plain transpose, never a
/// conjugate, so it stays analytic for complex scalars.
template <typename T>
Mat4<T> rigid_inverse(const Mat4<T>& m) {
  Mat4<T> inv = Mat4<T>::Identity();
  const Mat3<T> rt = m.template topLeftCorner<3, 3>().transpose();
  inv.template topLeftCorner<3, 3>() = rt;
  inv.template topRightCorner<3, 1>() = -rt * m.template topRightCorner<3, 1>();
  return inv;
}

/// A validated 4x4 rigid transform: orthonormal rotation with det +1 and an
/// exact [0 0 0 1] bottom row.
class RigidTransform {
 public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform() : m_(Eigen::Matrix4d::Identity()) {}
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  /// Throws InvalidArgument if `m` is not a rigid transform within kTolerance.
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);
  static RigidTransform translation(double x, double y, double z);
  static RigidTransform rotation(const Eigen::Matrix3d& r);

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Matrix3d rotation() const { return m_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return m_.topRightCorner<3, 1>(); }

  RigidTransform inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
  RigidTransform operator*(const RigidTransform& other) const;

 private:
  struct Unchecked {};
  RigidTransform(const Eigen::Matrix4d& m, Unchecked) : m_(m) {}

  Eigen::Matrix4d m_;
};

RigidTransform pose_to_transform(const Pose6& p);

struct PoseDecomposition {
  Pose6 pose;
  /// Pitch within 1e-9 of +-pi/2; roll is then fixed to 0.
  bool gimbal_lock = false;
};

PoseDecomposition decompose_transform(const RigidTransform& t);
Pose6 transform_to_pose(const RigidTransform& t);

/// Rectified linear pinhole model. Image axes: x right, y down, z forward.
struct PinholeCamera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidArgument unless fx, fy, width and height are positive.
  static PinholeCamera make(double fx, double fy, double cx, double cy, int width, int height);

  bool contains(const Eigen::Vector2d& uv) const {
    return uv.x() >= 0.0 && uv.y() >= 0.0 && uv.x() <= width && uv.y() <= height;
  }
};

/// Projects a world point through `T_camera_world`. Throws GeometryError when the
/// point is not strictly in front of the camera.
template <typename T, typename P>
Vec2<T> project(const PinholeCamera& cam, const Mat4<T>& T_camera_world, const Eigen::MatrixBase<P>& point) {
  const Vec3<T> pc = T_camera_world.template topLeftCorner<3, 3>() * point.template cast<T>() +
                     T_camera_world.template topRightCorner<3, 1>();
  if (!(real_part(pc.z()) > 0.0)) {
    throw GeometryError("point is not in front of the camera (z_cam = " + std::to_string(real_part(pc.z())) + ")");
  }
  return Vec2<T>(T(cam.fx) * pc.x() / pc.z() + T(cam.cx), T(cam.fy) * pc.y() / pc.z() + T(cam.cy));
}

inline Eigen::Vector2d project(const PinholeCamera& cam, const RigidTransform& T_camera_world,
                               const Eigen::Vector3d& point) {
  return project<double>(cam, T_camera_world.matrix(), point);
}

/// Image line. Stored in unit normal form nx*u + ny*v + c = 0 with ny >= 0
/// (nx > 0 when ny == 0); slope-intercept v = m*u + b is derived on demand.
class Line2D {
 public:
  static constexpr double kVerticalThreshold = 1e-6;

  static Line2D from_slope_intercept(double m, double b);
  /// Normalizes (nx, ny) to unit length and applies the sign convention.
  static Line2D from_normal(double nx, double ny, double c);

  double nx() const { return nx_; }
  double ny() const { return ny_; }
  double c() const { return c_; }

  bool has_slope_intercept() const { return std::abs(ny_) > kVerticalThreshold; }
  /// Throws GeometryError for (near-)vertical lines.
  double slope() const;
  double intercept() const;

 private:
  Line2D(double nx, double ny, double c) : nx_(nx), ny_(ny), c_(c) {}
  double nx_, ny_, c_;
};

/// Signed distance of `t` from the line, (-m*u + v - b) / sqrt(m^2 + 1).
/// Vertical lines fall back to the normal form.
template <typename T>
T point_line_distance(const Line2D& line, const Vec2<T>& t) {
  if (line.has_slope_intercept()) {
    const double m = line.slope();
    const double b = line.intercept();
    return (T(-m) * t.x() + t.y() - T(b)) / T(std::sqrt(m * m + 1.0));
  }
  return T(line.nx()) * t.x() + T(line.ny()) * t.y() + T(line.c());
}

/// Total least squares line through the points. Throws DegenerateConfiguration
/// for fewer than two points or when all points coincide.
Line2D fit_line_2d(std::span<const Eigen::Vector2d> points);

}  // namespace axiscal
