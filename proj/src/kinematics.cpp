#include "axiscal/kinematics.hpp"

#include <algorithm>
#include <string>

namespace axiscal {

KinematicChain::KinematicChain(std::vector<KinematicLink> links) : links_(std::move(links)) {
  if (links_.empty()) throw InvalidArgument("kinematic chain needs at least one link");
}

KinematicChain KinematicChain::prefix(std::size_t count) const {
  if (count == 0 || count > links_.size()) throw InvalidArgument("chain prefix length out of range");
  return KinematicChain(std::vector<KinematicLink>(links_.begin(), links_.begin() + static_cast<long>(count)));
}

KinematicChain KinematicChain::concatenated(const KinematicChain& tail) const {
  std::vector<KinematicLink> all = links_;
  all.insert(all.end(), tail.links_.begin(), tail.links_.end());
  return KinematicChain(std::move(all));
}

RigidTransform forward_kinematics(const KinematicChain& chain, std::span<const double> angles) {
  if (angles.size() != chain.size()) {
    throw InvalidArgument("joint angle count " + std::to_string(angles.size()) + " does not match chain length " +
                          std::to_string(chain.size()));
  }
  RigidTransform t;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    t = t * chain.links()[i].fixed * RigidTransform::rotation(rotation_z(angles[i]));
  }
  return t;
}

std::vector<Eigen::Vector3d> axis_test_points(const KinematicChain& chain, std::span<const double> angles,
                                              std::span<const double> z_values) {
  std::vector<double> distinct(z_values.begin(), z_values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw InvalidArgument("at least two distinct axis test values are required");

  const RigidTransform end = forward_kinematics(chain, angles);
  std::vector<Eigen::Vector3d> out;
  out.reserve(z_values.size());
  for (double z : z_values) out.push_back(end.apply(Eigen::Vector3d(0.0, 0.0, z)));
  return out;
}

Eigen::Vector3d wrist_position(const KinematicChain& chain, std::span<const double> angles) {
  if (angles.size() != chain.size()) throw InvalidArgument("joint angle count does not match chain length");
  if (chain.size() == 1) return Eigen::Vector3d::Zero();
  return forward_kinematics(chain.prefix(chain.size() - 1), angles.first(chain.size() - 1)).translation();
}

}  // namespace axiscal
