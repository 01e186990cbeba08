#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "axiscal/axis_recovery.hpp"
#include "axiscal/sim.hpp"

using namespace axiscal;

namespace {

constexpr double kPi = std::numbers::pi;

const PinholeCamera kCamera = PinholeCamera::make(525, 525, 320, 240, 640, 480);

// Test-side projection for the stage-one camera one unit behind the origin.
Eigen::Vector2d stage1_project(const Eigen::Vector3d& p) {
  const double z = p.z() + 1.0;
  return {kCamera.fx * p.x() / z + kCamera.cx, kCamera.fy * p.y() / z + kCamera.cy};
}

CoaxialAxisModel sample_model() {
  CoaxialAxisModel m;
  m.origin = Eigen::Vector3d(0.05, -0.03, 0.4);
  m.theta = 0.35;
  m.phi = -0.8;
  m.radius = {0.12, 0.18, 0.25};
  m.offset = {-0.05, 0.02, 0.09};
  return m;
}

// Points of circle j at the given angles, built from an independent plane basis.
std::vector<FeatureTrack> tracks_from_model(const CoaxialAxisModel& m, std::size_t points, double sweep) {
  const Eigen::Vector3d d(-std::sin(m.theta), std::cos(m.theta) * std::cos(m.phi), std::cos(m.theta) * std::sin(m.phi));
  const Eigen::Vector3d u = d.unitOrthogonal();
  const Eigen::Vector3d v = d.cross(u);
  std::vector<FeatureTrack> out;
  for (std::size_t j = 0; j < m.radius.size(); ++j) {
    const Eigen::Vector3d c = m.origin + m.offset[j] * d;
    std::vector<TrackPoint> pts;
    for (std::size_t i = 0; i < points; ++i) {
      const double a = 0.7 * static_cast<double>(j) + sweep * static_cast<double>(i) / static_cast<double>(points - 1);
      pts.push_back({static_cast<long>(i), stage1_project(c + m.radius[j] * (std::cos(a) * u + std::sin(a) * v))});
    }
    out.emplace_back(static_cast<int>(j), pts);
  }
  return out;
}

FeatureTrack line_track(int id, std::size_t n, const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
  std::vector<TrackPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    pts.push_back({static_cast<long>(i), from + t * (to - from)});
  }
  return FeatureTrack(id, pts);
}

}  // namespace

TEST(FeatureTrack, FramesMustIncrease) {
  EXPECT_THROW(FeatureTrack(0, {{1, {0, 0}}, {1, {1, 1}}}), InvalidArgument);
  EXPECT_THROW(FeatureTrack(0, {{2, {0, 0}}, {1, {1, 1}}}), InvalidArgument);
  EXPECT_NO_THROW(FeatureTrack(0, {{1, {0, 0}}, {5, {1, 1}}}));
}

TEST(FilterTracks, Examples) {
  const auto short_track = line_track(0, 2, {0, 0}, {100, 0});
  const auto stationary = line_track(1, 50, {10, 10}, {10, 10});
  std::vector<TrackPoint> arc;
  for (int i = 0; i < 40; ++i) {
    const double a = (kPi / 2) * i / 39.0;
    arc.push_back({i, Eigen::Vector2d(300 + 30 * std::cos(a), 200 + 30 * std::sin(a))});
  }
  const std::vector<FeatureTrack> tracks{short_track, stationary, FeatureTrack(2, arc)};
  const auto kept = filter_tracks(tracks, 10, 5.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id(), 2);
  EXPECT_NEAR(kept[0].path_length(), 30 * kPi / 2, 0.05);
  EXPECT_TRUE(filter_tracks({}, 10, 5.0).empty());
}

TEST(AxisDirection, Examples) {
  EXPECT_TRUE(axis_direction(0, 0).isApprox(Eigen::Vector3d(0, 1, 0)));
  EXPECT_LT((axis_direction(kPi / 2, 0) - Eigen::Vector3d(-1, 0, 0)).norm(), 1e-15);
}

TEST(AxisDirection, UnitNormAndMatchesRotationProduct) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 1000; ++i) {
    const double t = ang(rng), p = ang(rng);
    const Eigen::Vector3d d = axis_direction(t, p);
    EXPECT_NEAR(d.norm(), 1.0, 1e-15);
    const Eigen::Vector3d expected = rotation_x(p) * rotation_z(t) * Eigen::Vector3d::UnitY();
    EXPECT_LT((d - expected).norm(), 1e-15);
  }
}

TEST(CoaxialAxisModel, VectorLayoutAndInitialCondition) {
  const auto m = CoaxialAxisModel::initial(3);
  EXPECT_EQ(m.parameter_count(), 11u);
  const Eigen::VectorXd v = m.to_vector();
  ASSERT_EQ(v.size(), 11);
  EXPECT_TRUE(v.head<5>().isZero(0.0));
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(v(5 + 2 * j), 1.0);
    EXPECT_NEAR(v(6 + 2 * j), 0.1 * (j + 1), 1e-15);
  }
  const auto back = CoaxialAxisModel::from_vector(sample_model().to_vector());
  EXPECT_EQ(back.to_vector(), sample_model().to_vector());
}

TEST(CirclePoints, AxisAlignedUnitCircle) {
  CoaxialAxisModel m;
  m.theta = 0.0;
  m.phi = kPi / 2;  // axis along +z
  m.radius = {1.0};
  m.offset = {0.0};
  const auto pts = circle_points(m, 0, 4);
  ASSERT_EQ(pts.size(), 4u);
  for (const auto& p : pts) {
    EXPECT_NEAR(p.norm(), 1.0, 1e-15);
    EXPECT_NEAR(p.z(), 0.0, 1e-15);
  }
}

TEST(CirclePoints, OnCircleAndInPlane) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    CoaxialAxisModel m;
    m.origin = Eigen::Vector3d(u(rng), u(rng), u(rng));
    m.theta = kPi * u(rng);
    m.phi = kPi * u(rng);
    m.radius = {0.1 + std::abs(u(rng)), 0.1 + std::abs(u(rng))};
    m.offset = {u(rng), u(rng)};
    for (std::size_t j = 0; j < 2; ++j) {
      for (const auto& p : circle_points(m, j, 64)) {
        EXPECT_NEAR((p - m.center(j)).norm(), m.radius[j], 1e-12);
        EXPECT_NEAR((p - m.center(j)).dot(m.direction()), 0.0, 1e-12);
      }
    }
  }
}

TEST(CirclePoints, CentersCollinear) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    CoaxialAxisModel m;
    m.origin = Eigen::Vector3d(u(rng), u(rng), u(rng));
    m.theta = kPi * u(rng);
    m.phi = kPi * u(rng);
    for (int j = 0; j < 5; ++j) {
      m.radius.push_back(0.5);
      m.offset.push_back(2.0 * u(rng));
    }
    // Mean of the sampled points is the centre; compare against the line through centres 0 and 1.
    std::vector<Eigen::Vector3d> centres;
    for (std::size_t j = 0; j < 5; ++j) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (const auto& p : circle_points(m, j, 64)) mean += p / 64.0;
      centres.push_back(mean);
    }
    const Eigen::Vector3d a = m.center(0), b = m.center(4);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_LT((b - a).normalized().cross(m.center(j) - a).norm(), 1e-12);
      EXPECT_LT((centres[j] - m.center(j)).norm(), 1e-12);
    }
  }
}

TEST(Stage1Residual, ZeroAtGeneratingModel) {
  const auto m = sample_model();
  const auto tracks = tracks_from_model(m, 40, 5.0);
  const Eigen::VectorXd r = stage1_residual(m, tracks, kCamera);
  EXPECT_EQ(r.size(), 120);
  EXPECT_LT(r.norm(), 1e-6);
}

TEST(Stage1Residual, PerturbedRadiusIncreasesResidual) {
  const auto m = sample_model();
  const auto tracks = tracks_from_model(m, 40, 5.0);
  const double base = stage1_residual(m, tracks, kCamera).norm();
  for (std::size_t j = 0; j < m.radius.size(); ++j) {
    auto p = m;
    p.radius[j] *= 1.1;
    EXPECT_GT(stage1_residual(p, tracks, kCamera).norm(), base);
  }
}

TEST(Stage1Residual, TruthIsLocalMinimum) {
  const auto m = sample_model();
  const auto tracks = tracks_from_model(m, 40, 5.0);
  const Eigen::VectorXd x = m.to_vector();
  const double base = stage1_residual(m, tracks, kCamera).norm();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (double sign : {-1.0, 1.0}) {
      Eigen::VectorXd y = x;
      y(i) += sign * 0.01 * std::max(std::abs(x(i)), 0.1);
      EXPECT_GT(stage1_residual(CoaxialAxisModel::from_vector(y), tracks, kCamera).norm(), base) << "param " << i;
    }
  }
}

TEST(Stage1Residual, BehindCameraGivesPenalty) {
  auto m = sample_model();
  m.origin.z() = -3.0;
  const auto tracks = tracks_from_model(sample_model(), 20, 5.0);
  const Eigen::VectorXd r = stage1_residual(m, tracks, kCamera, 64, 1e3);
  EXPECT_EQ(r.size(), 60);
  EXPECT_TRUE((r.array().abs() == 1e3).all());
}

TEST(ProjectModelAxis, ScaleGaugeInvariant) {
  const auto m = sample_model();
  const Line2D ref = project_model_axis(m, kCamera);
  const Eigen::Vector3d centre(0, 0, -1);
  for (double lambda : {0.5, 2.0, 7.0}) {
    auto s = m;
    s.origin = centre + lambda * (m.origin - centre);
    for (auto& r : s.radius) r *= lambda;
    for (auto& o : s.offset) o *= lambda;
    const Line2D l = project_model_axis(s, kCamera);
    EXPECT_NEAR(l.nx(), ref.nx(), 1e-9);
    EXPECT_NEAR(l.ny(), ref.ny(), 1e-9);
    EXPECT_NEAR(l.c(), ref.c(), 1e-7);
  }
}

TEST(ProjectModelAxis, PassesThroughProjectedCentres) {
  const auto m = sample_model();
  const Line2D l = project_model_axis(m, kCamera);
  for (std::size_t j = 0; j < m.circle_count(); ++j) {
    EXPECT_NEAR(point_line_distance(l, stage1_project(m.center(j))), 0.0, 1e-9);
  }
}

TEST(RecoverAxis, ModelTracksRoundTrip) {
  const auto m = sample_model();
  const auto tracks = tracks_from_model(m, 40, 5.0);
  const auto obs = recover_axis(tracks, kCamera);
  EXPECT_TRUE(obs.converged);
  EXPECT_LT(obs.residual, 1e-6);
  for (std::size_t j = 0; j < m.circle_count(); ++j) {
    EXPECT_NEAR(point_line_distance(obs.line, stage1_project(m.center(j))), 0.0, 1e-3);
  }
  for (double r : obs.model.radius) EXPECT_GT(r, 0.0);
  EXPECT_EQ(obs.ellipses.size(), 3u);
}

TEST(RecoverAxis, SimulatedMeasurementsMatchTrueLine) {
  const auto cfg = reference_scenario();
  for (std::size_t i = 0; i < cfg.arm_poses.size(); ++i) {
    const auto synth = synthesize_measurement(cfg, i);
    const auto obs = recover_axis(filter_tracks(synth.tracks, 10, 5.0), cfg.camera);
    EXPECT_LT(obs.residual, 1e-6);
    EXPECT_LT(std::abs(obs.line.slope() - synth.true_line.slope()), 1e-4) << "measurement " << i;
    EXPECT_LT(std::abs(obs.line.intercept() - synth.true_line.intercept()), 0.1) << "measurement " << i;
  }
}

TEST(RecoverAxis, DeterministicAcrossThreads) {
  const auto cfg = reference_scenario();
  const auto synth = synthesize_measurement(cfg, 2);
  const auto noisy = add_noise(synth.tracks, 1.0, 77);
  Stage1Config serial;
  Stage1Config parallel;
  parallel.threads = 4;
  const auto a = recover_axis(noisy, cfg.camera, serial);
  const auto b = recover_axis(noisy, cfg.camera, parallel);
  EXPECT_EQ(a.model.to_vector(), b.model.to_vector());
  EXPECT_EQ(a.line.c(), b.line.c());
  EXPECT_EQ(a.best_restart, b.best_restart);
}

TEST(RecoverAxis, Errors) {
  const std::vector<FeatureTrack> five{line_track(0, 5, {0, 0}, {50, 20})};
  EXPECT_THROW(recover_axis(five, kCamera), InvalidArgument);
  EXPECT_THROW(recover_axis({}, kCamera), InvalidArgument);
}
