#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "axiscal/io.hpp"
#include "axiscal/kinematics.hpp"
#include "fixtures.hpp"

using namespace axiscal;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix4d hand_rz(double a) {
  Eigen::Matrix4d m;
  m << std::cos(a), -std::sin(a), 0, 0,
       std::sin(a), std::cos(a), 0, 0,
       0, 0, 1, 0,
       0, 0, 0, 1;
  return m;
}

KinematicChain random_chain(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> pos(-0.5, 0.5);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  std::vector<KinematicLink> links;
  for (std::size_t i = 0; i < n; ++i) {
    links.push_back({pose_to_transform(Pose6{pos(rng), pos(rng), pos(rng), ang(rng), ang(rng) / 2, ang(rng)})});
  }
  return KinematicChain(links);
}

JointAngles random_angles(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  JointAngles a(n);
  for (auto& v : a) v = ang(rng);
  return a;
}

double collinearity(const std::vector<Eigen::Vector3d>& pts) {
  const Eigen::Vector3d d = pts.back() - pts.front();
  double worst = 0.0;
  for (const auto& p : pts) worst = std::max(worst, d.cross(p - pts.front()).norm() / d.squaredNorm());
  return worst;
}

}  // namespace

TEST(KinematicChain, EmptyChainRejected) {
  EXPECT_THROW(KinematicChain(std::vector<KinematicLink>{}), InvalidArgument);
}

TEST(ForwardKinematics, IdentityLinksZeroAngles) {
  const KinematicChain chain(std::vector<KinematicLink>(4));
  const JointAngles q(4, 0.0);
  EXPECT_EQ(forward_kinematics(chain, q).matrix(), Eigen::Matrix4d::Identity());
}

TEST(ForwardKinematics, SingleIdentityLinkIsZRotation) {
  const KinematicChain chain(std::vector<KinematicLink>(1));
  const JointAngles q{kPi / 2};
  EXPECT_TRUE(forward_kinematics(chain, q).matrix().isApprox(hand_rz(kPi / 2), 1e-15));
}

TEST(ForwardKinematics, TwoLinkHandMultiplied) {
  Eigen::Matrix4d l1 = Eigen::Matrix4d::Identity();
  l1(2, 3) = 0.3;
  Eigen::Matrix4d l2;
  l2 << 1, 0, 0, 0.2,
        0, 0, -1, 0,
        0, 1, 0, 0,
        0, 0, 0, 1;
  const Eigen::Matrix4d expected = l1 * hand_rz(kPi / 4) * l2 * hand_rz(kPi / 3);

  const KinematicChain chain({{RigidTransform::translation(0, 0, 0.3)},
                              {RigidTransform::translation(0.2, 0, 0) *
                               pose_to_transform(Pose6{0, 0, 0, kPi / 2, 0, 0})}});
  const JointAngles q{kPi / 4, kPi / 3};
  EXPECT_LT((forward_kinematics(chain, q).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ForwardKinematics, LengthMismatchThrows) {
  const KinematicChain chain(std::vector<KinematicLink>(3));
  const JointAngles q{0.1, 0.2};
  EXPECT_THROW(forward_kinematics(chain, q), InvalidArgument);
}

TEST(ForwardKinematics, ConcatenationIsProduct) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto a = random_chain(rng, 3);
    const auto b = random_chain(rng, 2);
    const auto qa = random_angles(rng, 3);
    const auto qb = random_angles(rng, 2);
    JointAngles q = qa;
    q.insert(q.end(), qb.begin(), qb.end());
    const Eigen::Matrix4d whole = forward_kinematics(a.concatenated(b), q).matrix();
    const Eigen::Matrix4d parts = (forward_kinematics(a, qa) * forward_kinematics(b, qb)).matrix();
    EXPECT_LT((whole - parts).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AxisTestPoints, IdentityChain) {
  const KinematicChain chain(std::vector<KinematicLink>(1));
  const JointAngles q{0.0};
  const std::vector<double> z{0.0, 1.0};
  const auto pts = axis_test_points(chain, q, z);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0], Eigen::Vector3d(0, 0, 0));
  EXPECT_EQ(pts[1], Eigen::Vector3d(0, 0, 1));
}

TEST(AxisTestPoints, NeedTwoDistinctValues) {
  const KinematicChain chain(std::vector<KinematicLink>(1));
  const JointAngles q{0.0};
  const std::vector<double> one{0.5};
  const std::vector<double> same{0.5, 0.5};
  EXPECT_THROW(axis_test_points(chain, q, one), InvalidArgument);
  EXPECT_THROW(axis_test_points(chain, q, same), InvalidArgument);
}

TEST(AxisTestPoints, CollinearForRandomChains) {
  std::mt19937_64 rng(17);
  const std::vector<double> z{-0.3, 0.0, 0.1, 0.25, 1.0};
  for (int i = 0; i < 200; ++i) {
    const auto chain = random_chain(rng, 1 + i % 7);
    const auto q = random_angles(rng, chain.size());
    EXPECT_LT(collinearity(axis_test_points(chain, q, z)), 1e-12);
  }
}

TEST(AxisTestPoints, InvariantUnderFinalJoint) {
  std::mt19937_64 rng(23);
  const std::vector<double> z{0.0, 0.1};
  for (int i = 0; i < 50; ++i) {
    const auto chain = random_chain(rng, 6);
    auto q = random_angles(rng, 6);
    const auto ref = axis_test_points(chain, q, z);
    q.back() += 1.234;
    const auto moved = axis_test_points(chain, q, z);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_LT((ref[k] - moved[k]).norm(), 1e-12);
    q.front() += 0.5;
    const auto other = axis_test_points(chain, q, z);
    EXPECT_GT((ref[0] - other[0]).norm() + (ref[1] - other[1]).norm(), 1e-6);
  }
}

TEST(WristPosition, IsPrefixForwardKinematics) {
  std::mt19937_64 rng(31);
  const auto chain = random_chain(rng, 6);
  const auto q = random_angles(rng, 6);
  const JointAngles head(q.begin(), q.end() - 1);
  EXPECT_TRUE(wrist_position(chain, q).isApprox(forward_kinematics(chain.prefix(5), head).translation(), 1e-14));
}

TEST(LoadChain, EmptyLinkListRejected) {
  EXPECT_THROW(load_chain(Json::parse(R"({"links": []})")), ParseError);
  EXPECT_THROW(load_chain(Json::parse(R"({"joints": []})")), ParseError);
  EXPECT_THROW(load_chain(Json::parse(R"({"links": [{"pose": {"x": 0}}]})")), ParseError);
}

TEST(LoadChain, SingleIdentityLink) {
  const auto chain =
      load_chain(Json::parse(R"({"links": [{"pose": {"x":0,"y":0,"z":0,"phi":0,"theta":0,"psi":0}}]})"));
  ASSERT_EQ(chain.size(), 1u);
  EXPECT_EQ(chain.links()[0].fixed.matrix(), Eigen::Matrix4d::Identity());
}

TEST(LoadChain, ShippedSixLinkFixtureRoundTrips) {
  const auto chain = load_chain(read_json_file(fixtures::data_path("jaco_like_chain.json")));
  ASSERT_EQ(chain.size(), 6u);
  const auto again = load_chain(to_json(chain));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(chain.links()[i].fixed.matrix().isApprox(again.links()[i].fixed.matrix(), 1e-12));
  }
  const auto reference = reference_scenario().chain;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_LT((chain.links()[i].fixed.matrix() - reference.links()[i].fixed.matrix()).cwiseAbs().maxCoeff(), 1e-15);
  }
}
