#pragma once

#include <span>
#include <vector>

#include "axiscal/geometry.hpp"

namespace axiscal {

/// Fixed mechanism leading into a revolute joint; the joint itself rotates
/// about the local z axis of the frame `fixed` lands in.
struct KinematicLink {
  RigidTransform fixed;
};

class KinematicChain {
 public:
  /// Throws InvalidArgument on an empty link list.
  explicit KinematicChain(std::vector<KinematicLink> links);

  std::size_t size() const { return links_.size(); }
  const std::vector<KinematicLink>& links() const { return links_; }

  /// First `count` links as a chain of their own (count >= 1).
  KinematicChain prefix(std::size_t count) const;
  /// This chain followed by `tail`.
  KinematicChain concatenated(const KinematicChain& tail) const;

 private:
  std::vector<KinematicLink> links_;
};

using JointAngles = std::vector<double>;

/// Product over links of L_i * Rz(theta_i), in the arm base frame.
RigidTransform forward_kinematics(const KinematicChain& chain, std::span<const double> angles);

/// Maps points [0, 0, z'] on the final joint's axis into the base frame.
/// Requires at least two distinct z' values.
std::vector<Eigen::Vector3d> axis_test_points(const KinematicChain& chain, std::span<const double> angles,
                                              std::span<const double> z_values);

/// Position of the frame entering the final joint (forward kinematics through the
/// second-to-last joint). For a one-link chain this is the base origin.
Eigen::Vector3d wrist_position(const KinematicChain& chain, std::span<const double> angles);

}  // namespace axiscal
