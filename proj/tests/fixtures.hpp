#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "axiscal/io.hpp"
#include "axiscal/sim.hpp"

namespace axiscal::fixtures {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(AXISCAL_DATA_DIR) / name;
}

inline ScenarioConfig load_scenario_fixture(const std::string& name) {
  return scenario_from_json(read_json_file(data_path(name)));
}

/// Same images as `base`, but with the camera at `camera` in the arm frame:
/// the whole world is moved by G = T_new * T_old^-1 through the first link.
inline ScenarioConfig with_camera_pose(const ScenarioConfig& base, const Pose6& camera) {
  const RigidTransform g = pose_to_transform(camera) * pose_to_transform(base.camera_pose).inverse();
  std::vector<KinematicLink> links = base.chain.links();
  links.front().fixed = g * links.front().fixed;
  ScenarioConfig out{.camera = base.camera, .chain = KinematicChain(links), .camera_pose = camera};
  out.arm_poses = base.arm_poses;
  out.features = base.features;
  out.frames = base.frames;
  out.sweep_rad = base.sweep_rad;
  out.noise_levels = base.noise_levels;
  out.stage1 = base.stage1;
  out.stage2 = base.stage2;
  return out;
}

/// Stage one over every arm pose of `config` with noise of variance `var`.
inline std::vector<Measurement> recover_measurements(const ScenarioConfig& config, double var, std::uint64_t seed) {
  std::vector<Measurement> out;
  for (std::size_t i = 0; i < config.arm_poses.size(); ++i) {
    const auto synth = synthesize_measurement(config, i);
    const auto noisy = add_noise(synth.tracks, var, derive_seed(seed, i));
    const auto kept = filter_tracks(noisy, config.stage1.min_track_length, config.stage1.min_motion_px);
    out.push_back({synth.joint_angles, recover_axis(kept, config.camera, config.stage1)});
  }
  return out;
}

/// Translation error (m) and rotation angle between estimate and truth (rad).
struct PoseGap {
  double position = 0.0;
  double angle = 0.0;
};

inline PoseGap pose_gap(const Pose6& estimate, const Pose6& truth) {
  const RigidTransform a = pose_to_transform(estimate);
  const RigidTransform b = pose_to_transform(truth);
  const Eigen::Matrix3d d = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return {(a.translation() - b.translation()).norm(), std::acos(c)};
}

}  // namespace axiscal::fixtures
