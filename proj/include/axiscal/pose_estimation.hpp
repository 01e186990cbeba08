#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "axiscal/axis_recovery.hpp"
#include "axiscal/kinematics.hpp"
#include "axiscal/optim.hpp"

namespace axiscal {

struct Measurement {
  JointAngles joint_angles;
  AxisObservation axis;
  /// Scalar weight on this measurement's residual block (the diagonal of R^-1).
  double weight = 1.0;
};

/// Stage-two least-squares problem: for every measurement, test points on the
/// final joint axis are mapped through the arm, projected with the candidate
/// camera pose, and compared with the observed axis line.
class Stage2Problem {
 public:
  /// Throws InvalidArgument on an empty set, fewer than two distinct z values,
  /// or a non-positive weight.
  Stage2Problem(std::span<const Measurement> measurements, const KinematicChain& chain, const PinholeCamera& camera,
                std::span<const double> z_values);

  std::size_t measurement_count() const { return lines_.size(); }
  std::size_t points_per_measurement() const { return per_measurement_; }
  std::size_t residual_count() const { return lines_.size() * per_measurement_; }

  /// x = [x y z phi theta psi], the camera pose in the arm base frame.
  /// Throws BehindCameraError naming the first offending measurement.
  template <typename T>
  Eigen::Matrix<T, Eigen::Dynamic, 1> residual(const Eigen::Matrix<T, 6, 1>& x) const {
    const Mat4<T> camera_from_world = rigid_inverse<T>(pose_matrix(BasicPose6<T>::from_vector(x)));
    Eigen::Matrix<T, Eigen::Dynamic, 1> r(static_cast<Eigen::Index>(residual_count()));
    Eigen::Index k = 0;
    for (std::size_t m = 0; m < lines_.size(); ++m) {
      const T scale(std::sqrt(weights_[m]));
      for (std::size_t j = 0; j < per_measurement_; ++j) {
        Vec2<T> uv;
        try {
          uv = project<T>(camera_, camera_from_world, points_[m * per_measurement_ + j]);
        } catch (const GeometryError& e) {
          throw BehindCameraError(m, "measurement " + std::to_string(m) + ": axis test point " + std::to_string(j) +
                                         " is behind the camera");
        }
        r(k++) = scale * point_line_distance(lines_[m], uv);
      }
    }
    return r;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;

 private:
  std::vector<Line2D> lines_;
  std::vector<double> weights_;
  std::vector<Eigen::Vector3d> points_;
  std::size_t per_measurement_ = 0;
  PinholeCamera camera_;
};

/// Convenience wrapper around Stage2Problem::residual.
Eigen::VectorXd stage2_residual(const Pose6& x, std::span<const Measurement> measurements, const KinematicChain& chain,
                                const PinholeCamera& camera, std::span<const double> z_values);

/// Complex-step Jacobian: column i = Im(r(x + i h e_i)) / h. `fn` must accept an
/// Eigen column vector of std::complex<double> of the same size as x and return
/// one, using only operations that are analytic in a neighbourhood of x.
/// Throws GeometryError if any derivative comes back non-finite.
template <typename Fn, int N>
Eigen::MatrixXd jacobian_complex_step(const Fn& fn, const Eigen::Matrix<double, N, 1>& x, double h = 1e-20) {
  using Complex = std::complex<double>;
  Eigen::Matrix<Complex, N, 1> xc = x.template cast<Complex>();
  Eigen::MatrixXd j;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xc(i) = Complex(x(i), h);
    const auto r = fn(xc);
    xc(i) = Complex(x(i), 0.0);
    if (i == 0) j.resize(r.size(), x.size());
    for (Eigen::Index row = 0; row < r.size(); ++row) j(row, i) = r(row).imag() / h;
  }
  if (!j.allFinite()) throw GeometryError("complex-step derivative is not finite; residual path is not analytic");
  return j;
}

/// Stage-two Jacobian at x by complex step.
Eigen::MatrixXd stage2_jacobian(const Stage2Problem& problem, const Vector6d& x);

/// Condition number of J^T J above which covariance is refused.
inline constexpr double kMaxNormalCondition = 1e12;

/// (J^T J)^-1. Throws DegenerateConfiguration when J^T J is rank deficient.
Eigen::MatrixXd covariance_matrix_from_jacobian(const Eigen::MatrixXd& j);
/// Diagonal of (J^T J)^-1.
Eigen::VectorXd covariance_from_jacobian(const Eigen::MatrixXd& j);

struct ValidationIssue {
  std::string code;  // "too_few_measurements" | "single_crossing"
  std::string message;
};

struct ValidationReport {
  bool passed = true;
  std::vector<ValidationIssue> issues;
  std::vector<Eigen::Vector3d> wrist_positions;
};

/// Fails with fewer than three measurements, or when every wrist position
/// coincides within `coincidence_threshold_m` (single crossing).
ValidationReport validate_measurement_set(std::span<const JointAngles> joint_angles, const KinematicChain& chain,
                                          double coincidence_threshold_m = 0.01);
ValidationReport validate_measurement_set(std::span<const Measurement> measurements, const KinematicChain& chain,
                                          double coincidence_threshold_m = 0.01);

struct Stage2Config {
  std::size_t restarts = 20;
  std::uint64_t seed = 7;
  /// Start positions are drawn uniformly in [-box, box]^3 (meters).
  double position_box_m = 2.0;
  std::vector<double> z_values{0.0, 0.1};
  double coincidence_threshold_m = 0.01;
  /// Skip measurement-set validation (reproduces degenerate-set behaviour).
  bool force = false;
  /// Draws per start until every test point is in front of the camera.
  std::size_t max_start_attempts = 2000;
  unsigned threads = 1;
  LMOptions lm;
};

struct RestartStats {
  std::size_t count = 0;
  std::size_t converged = 0;
  std::size_t failed = 0;
  std::size_t best_index = 0;
};

struct CalibrationResult {
  Pose6 pose;
  /// Diagonal of (J^T J)^-1 (m^2, rad^2). Empty when J^T J is rank deficient.
  std::optional<Vector6d> variance;
  std::optional<Eigen::Matrix<double, 6, 6>> covariance;
  std::string covariance_error;
  double residual_norm = 0.0;
  RestartStats restarts;
  ValidationReport validation;
  LMReport solve;
};

/// Camera pose in the arm base frame from axis observations. Covariance is the
/// Gauss-Newton approximation; it tends to be optimistic on real data.
/// Throws DegenerateConfiguration when validation fails (unless forced) and
/// ConvergenceError when no restart converges.
CalibrationResult estimate_pose(std::span<const Measurement> measurements, const KinematicChain& chain,
                                const PinholeCamera& camera, const Stage2Config& config = {});

}  // namespace axiscal
