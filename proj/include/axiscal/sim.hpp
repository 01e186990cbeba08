#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "axiscal/axis_recovery.hpp"
#include "axiscal/kinematics.hpp"
#include "axiscal/pose_estimation.hpp"

namespace axiscal {

/// A tracked point fixed to the end effector: `radius` from the final joint
/// axis, `offset` along it, starting at angle `phase` in the final joint frame.
struct FeatureSpec {
  double radius = 0.05;
  double offset = 0.0;
  double phase = 0.0;
};

struct ScenarioConfig {
  PinholeCamera camera;
  KinematicChain chain;
  /// True camera pose in the arm base frame.
  Pose6 camera_pose;
  std::vector<JointAngles> arm_poses;
  std::vector<FeatureSpec> features;
  std::size_t frames = 60;
  /// Final-joint sweep per measurement, starting at the pose's own angle.
  double sweep_rad = 300.0 * 3.14159265358979323846 / 180.0;
  double noise_var = 0.0;
  std::vector<double> noise_levels;
  std::size_t trials = 100;
  std::uint64_t seed = 42;
  unsigned threads = 1;
  Stage1Config stage1;
  Stage2Config stage2;
};

/// Reference scenario shipped with the project: a six-joint arm, a camera about
/// a metre away, six arm poses and three features per rotation.
ScenarioConfig reference_scenario();

struct SynthesizedMeasurement {
  JointAngles joint_angles;
  std::vector<FeatureTrack> tracks;
  /// Image of the true final-joint axis.
  Line2D true_line = Line2D::from_slope_intercept(0.0, 0.0);
};

/// Noiseless tracks for arm pose `index`. Throws GeometryError naming the arm pose
/// when a feature leaves the camera frustum.
SynthesizedMeasurement synthesize_measurement(const ScenarioConfig& config, std::size_t index);

/// Ground-truth image line of the final joint axis for one arm pose.
Line2D true_axis_line(const ScenarioConfig& config, const JointAngles& angles);

/// Adds independent N(0, noise_var) to every u and v. Deterministic in `seed`.
std::vector<FeatureTrack> add_noise(std::span<const FeatureTrack> tracks, double noise_var, std::uint64_t seed);

/// Mixes a master seed with stream identifiers (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

struct ErrorSample {
  std::size_t trial = 0;
  bool ok = false;
  std::string failure;
  /// Per measurement: estimated minus true slope / intercept.
  std::vector<double> dm;
  std::vector<double> db;
  std::vector<double> stage1_residual;
  /// Estimated minus true [x y z phi theta psi], angles wrapped.
  Vector6d pose_error = Vector6d::Zero();
};

struct MonteCarloSummary {
  double noise_var = 0.0;
  std::size_t trials = 0;
  std::size_t failures = 0;
  Vector6d pose_mean = Vector6d::Zero();
  Vector6d pose_std = Vector6d::Zero();
  std::vector<double> dm_std;
  std::vector<double> db_std;
  /// Pearson correlation of (dm, db) per measurement.
  std::vector<double> line_correlation;
};

struct MonteCarloResult {
  std::vector<ErrorSample> samples;
  MonteCarloSummary summary;
};

/// Runs `config.trials` noisy trials at `noise_var` through both stages.
/// Trial seeds depend only on (config.seed, trial index), so every noise level
/// sees the same underlying draws and results do not depend on `threads`.
/// Failed trials are kept in `samples` but excluded from the summary; throws
/// ConvergenceError if more than half fail.
MonteCarloResult monte_carlo(const ScenarioConfig& config, double noise_var,
                             const std::function<void(std::size_t done, std::size_t total)>& progress = {});

MonteCarloSummary summarize(std::span<const ErrorSample> samples, double noise_var);

/// One row per trial: trial, noise_var, dm_k/db_k pairs, six pose errors.
std::string monte_carlo_csv(const MonteCarloResult& result);

}  // namespace axiscal
