#include "axiscal/pose_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace axiscal {

Stage2Problem::Stage2Problem(std::span<const Measurement> measurements, const KinematicChain& chain,
                             const PinholeCamera& camera, std::span<const double> z_values)
    : camera_(camera) {
  if (measurements.empty()) throw InvalidArgument("stage two needs at least one measurement");
  per_measurement_ = z_values.size();
  for (const auto& m : measurements) {
    if (!(m.weight > 0.0) || !std::isfinite(m.weight)) throw InvalidArgument("measurement weights must be positive");
    const auto pts = axis_test_points(chain, m.joint_angles, z_values);
    points_.insert(points_.end(), pts.begin(), pts.end());
    lines_.push_back(m.axis.line);
    weights_.push_back(m.weight);
  }
}

Eigen::VectorXd Stage2Problem::residual(const Eigen::VectorXd& x) const {
  if (x.size() != 6) throw InvalidArgument("stage-two parameter vector must have 6 entries");
  return residual<double>(Vector6d(x));
}

Eigen::VectorXd stage2_residual(const Pose6& x, std::span<const Measurement> measurements, const KinematicChain& chain,
                                const PinholeCamera& camera, std::span<const double> z_values) {
  return Stage2Problem(measurements, chain, camera, z_values).residual<double>(x.vector());
}

Eigen::MatrixXd stage2_jacobian(const Stage2Problem& problem, const Vector6d& x) {
  return jacobian_complex_step([&](const auto& xc) { return problem.residual(xc); }, x);
}

Eigen::MatrixXd covariance_matrix_from_jacobian(const Eigen::MatrixXd& j) {
  if (j.cols() == 0 || j.rows() < j.cols()) throw DegenerateConfiguration("Jacobian has fewer rows than parameters");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || (smax / smin) * (smax / smin) > kMaxNormalCondition) {
    throw DegenerateConfiguration("J^T J is rank deficient (condition number " +
                                  std::to_string(smin > 0.0 ? (smax / smin) * (smax / smin) : INFINITY) + ")");
  }
  const Eigen::MatrixXd jtj = j.transpose() * j;
  return jtj.ldlt().solve(Eigen::MatrixXd::Identity(j.cols(), j.cols()));
}

Eigen::VectorXd covariance_from_jacobian(const Eigen::MatrixXd& j) {
  return covariance_matrix_from_jacobian(j).diagonal();
}

ValidationReport validate_measurement_set(std::span<const JointAngles> joint_angles, const KinematicChain& chain,
                                          double coincidence_threshold_m) {
  ValidationReport report;
  if (joint_angles.size() < 3) {
    report.passed = false;
    report.issues.push_back({"too_few_measurements", "a minimum of three measurements is required, got " +
                                                         std::to_string(joint_angles.size())});
  }
  for (const auto& a : joint_angles) report.wrist_positions.push_back(wrist_position(chain, a));

  if (!report.wrist_positions.empty()) {
    double max_separation = 0.0;
    for (std::size_t i = 0; i < report.wrist_positions.size(); ++i) {
      for (std::size_t k = i + 1; k < report.wrist_positions.size(); ++k) {
        max_separation = std::max(max_separation, (report.wrist_positions[i] - report.wrist_positions[k]).norm());
      }
    }
    if (report.wrist_positions.size() >= 2 && max_separation <= coincidence_threshold_m) {
      report.passed = false;
      report.issues.push_back({"single_crossing",
                               "single crossing: all wrist positions coincide within " +
                                   std::to_string(coincidence_threshold_m) +
                                   " m, so camera position is underdetermined along a line"});
    }
  }
  return report;
}

ValidationReport validate_measurement_set(std::span<const Measurement> measurements, const KinematicChain& chain,
                                          double coincidence_threshold_m) {
  std::vector<JointAngles> angles;
  angles.reserve(measurements.size());
  for (const auto& m : measurements) angles.push_back(m.joint_angles);
  return validate_measurement_set(angles, chain, coincidence_threshold_m);
}

namespace {

Vector6d sample_start(std::mt19937_64& rng, double box) {
  std::uniform_real_distribution<double> pos(-box, box);
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector3d t(pos(rng), pos(rng), pos(rng));
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  const Pose6 p = transform_to_pose(RigidTransform(q.toRotationMatrix(), t));
  return p.vector();
}

}  // namespace

CalibrationResult estimate_pose(std::span<const Measurement> measurements, const KinematicChain& chain,
                                const PinholeCamera& camera, const Stage2Config& config) {
  CalibrationResult result;
  result.validation = validate_measurement_set(measurements, chain, config.coincidence_threshold_m);
  if (!result.validation.passed && !config.force) {
    std::string why;
    for (const auto& issue : result.validation.issues) why += (why.empty() ? "" : "; ") + issue.message;
    throw DegenerateConfiguration("degenerate measurement set: " + why);
  }

  const Stage2Problem problem(measurements, chain, camera, config.z_values);
  const ResidualFn residual = [&](const Eigen::VectorXd& x) { return problem.residual(x); };
  const JacobianFn jacobian = [&](const Eigen::VectorXd& x) { return stage2_jacobian(problem, Vector6d(x)); };

  const StartSampler sampler = [&](std::mt19937_64& rng) -> Eigen::VectorXd {
    Vector6d x = sample_start(rng, config.position_box_m);
    for (std::size_t attempt = 1; attempt < config.max_start_attempts; ++attempt) {
      try {
        problem.residual<double>(x);
        break;
      } catch (const GeometryError&) {
        x = sample_start(rng, config.position_box_m);
      }
    }
    return x;
  };
  const Solver solver = [&](const Eigen::VectorXd& x0) { return levenberg_marquardt(residual, jacobian, x0, config.lm); };

  const RestartOutcome outcome = with_restarts(solver, sampler, config.restarts, config.seed, config.threads);
  result.restarts = {outcome.count, outcome.converged, outcome.failed, outcome.best_index};
  if (outcome.converged == 0) {
    throw ConvergenceError("no stage-two restart converged (best residual " +
                               std::to_string(outcome.best.residual_norm) + ")",
                           outcome.best.residual_norm);
  }
  result.solve = outcome.best;
  // LM may leave pitch outside [-pi/2, pi/2]; re-derive the canonical angles.
  result.pose = transform_to_pose(pose_to_transform(Pose6::from_vector(Vector6d(outcome.best.x))));
  result.residual_norm = outcome.best.residual_norm;

  try {
    const Eigen::MatrixXd cov = covariance_matrix_from_jacobian(stage2_jacobian(problem, result.pose.vector()));
    result.covariance = Eigen::Matrix<double, 6, 6>(cov);
    result.variance = Vector6d(cov.diagonal());
  } catch (const DegenerateConfiguration& e) {
    result.covariance_error = e.what();
  }
  return result;
}

}  // namespace axiscal
