#include "axiscal/axis_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace axiscal {

FeatureTrack::FeatureTrack(int id, std::vector<TrackPoint> points) : id_(id), points_(std::move(points)) {
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (points_[i].frame <= points_[i - 1].frame) {
      throw InvalidArgument("track " + std::to_string(id_) + ": frame indices must be strictly increasing");
    }
  }
  for (const auto& p : points_) {
    if (!p.uv.allFinite()) throw InvalidArgument("track " + std::to_string(id_) + ": non-finite pixel");
  }
}

std::vector<Eigen::Vector2d> FeatureTrack::pixels() const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.uv);
  return out;
}

double FeatureTrack::path_length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points_.size(); ++i) total += (points_[i].uv - points_[i - 1].uv).norm();
  return total;
}

std::vector<FeatureTrack> filter_tracks(std::span<const FeatureTrack> tracks, std::size_t min_length,
                                        double min_motion_px) {
  std::vector<FeatureTrack> kept;
  for (const auto& t : tracks) {
    if (t.size() >= min_length && t.path_length() >= min_motion_px) kept.push_back(t);
  }
  return kept;
}

Eigen::Vector3d axis_direction(double theta, double phi) {
  return rotation_x(phi) * rotation_z(theta) * Eigen::Vector3d::UnitY();
}

Eigen::VectorXd CoaxialAxisModel::to_vector() const {
  if (radius.size() != offset.size()) throw InvalidArgument("model radius/offset counts differ");
  Eigen::VectorXd v(static_cast<Eigen::Index>(parameter_count()));
  v.head<3>() = origin;
  v(3) = theta;
  v(4) = phi;
  for (std::size_t j = 0; j < radius.size(); ++j) {
    v(static_cast<Eigen::Index>(5 + 2 * j)) = radius[j];
    v(static_cast<Eigen::Index>(6 + 2 * j)) = offset[j];
  }
  return v;
}

CoaxialAxisModel CoaxialAxisModel::from_vector(const Eigen::VectorXd& v) {
  if (v.size() < 7 || (v.size() - 5) % 2 != 0) throw InvalidArgument("model vector must have 5 + 2m entries, m >= 1");
  CoaxialAxisModel m;
  m.origin = v.head<3>();
  m.theta = v(3);
  m.phi = v(4);
  const auto circles = static_cast<std::size_t>((v.size() - 5) / 2);
  m.radius.resize(circles);
  m.offset.resize(circles);
  for (std::size_t j = 0; j < circles; ++j) {
    m.radius[j] = v(static_cast<Eigen::Index>(5 + 2 * j));
    m.offset[j] = v(static_cast<Eigen::Index>(6 + 2 * j));
  }
  return m;
}

CoaxialAxisModel CoaxialAxisModel::initial(std::size_t circles) {
  CoaxialAxisModel m;
  m.radius.assign(circles, 1.0);
  m.offset.resize(circles);
  for (std::size_t j = 0; j < circles; ++j) m.offset[j] = 0.1 * static_cast<double>(j + 1);
  return m;
}

namespace {

// Orthonormal pair spanning the plane normal to d.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(const Eigen::Vector3d& d) {
  Eigen::Index least = 0;
  d.cwiseAbs().minCoeff(&least);
  const Eigen::Vector3d helper = Eigen::Vector3d::Unit(least);
  const Eigen::Vector3d u = helper.cross(d).normalized();
  return {u, d.cross(u)};
}

const std::vector<std::pair<double, double>>& unit_circle(std::size_t samples) {
  thread_local std::vector<std::pair<double, double>> table;
  if (table.size() != samples) {
    table.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(samples);
      table[i] = {std::cos(a), std::sin(a)};
    }
  }
  return table;
}

}  // namespace

std::vector<Eigen::Vector3d> circle_points(const CoaxialAxisModel& model, std::size_t j, std::size_t samples) {
  if (j >= model.circle_count()) throw InvalidArgument("circle index out of range");
  const Eigen::Vector3d d = model.direction();
  const auto [u, w] = plane_basis(d);
  const Eigen::Vector3d center = model.origin + model.offset[j] * d;
  const double r = model.radius[j];
  std::vector<Eigen::Vector3d> out;
  out.reserve(samples);
  for (const auto& [c, s] : unit_circle(samples)) out.push_back(center + r * (c * u + s * w));
  return out;
}

RigidTransform stage1_camera_from_world() { return pose_to_transform(Pose6{0.0, 0.0, -1.0, 0.0, 0.0, 0.0}).inverse(); }

namespace {

// Candidate ellipse of circle j as seen by the stage-one camera.
Conic candidate_ellipse(const CoaxialAxisModel& model, std::size_t j, const PinholeCamera& camera,
                        const RigidTransform& cam_from_world, std::size_t samples) {
  std::vector<Eigen::Vector2d> image;
  image.reserve(samples);
  for (const auto& p : circle_points(model, j, samples)) image.push_back(project(camera, cam_from_world, p));
  return fit_ellipse_direct(image);
}

}  // namespace

Eigen::VectorXd stage1_residual(const CoaxialAxisModel& model, std::span<const FeatureTrack> tracks,
                                const PinholeCamera& camera, std::size_t circle_samples, double penalty_px) {
  if (model.circle_count() != tracks.size()) {
    throw InvalidArgument("model has " + std::to_string(model.circle_count()) + " circles for " +
                          std::to_string(tracks.size()) + " tracks");
  }
  std::size_t total = 0;
  for (const auto& t : tracks) total += t.size();
  Eigen::VectorXd r(static_cast<Eigen::Index>(total));

  const RigidTransform cam_from_world = stage1_camera_from_world();
  Eigen::Index k = 0;
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    const auto& pts = tracks[j].points();
    const Eigen::Index start = k;
    try {
      const Conic conic = candidate_ellipse(model, j, camera, cam_from_world, circle_samples);
      for (const auto& p : pts) r(k++) = signed_sampson_distance(conic, p.uv);
    } catch (const Error&) {
      k = start;
      for (std::size_t i = 0; i < pts.size(); ++i) r(k++) = penalty_px;
    }
  }
  return r;
}

Line2D project_model_axis(const CoaxialAxisModel& model, const PinholeCamera& camera, std::size_t points) {
  if (points < 2) throw InvalidArgument("axis line export needs at least two points");
  const auto [lo_it, hi_it] = std::minmax_element(model.offset.begin(), model.offset.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-9) {
    double reach = 0.0;
    for (double r : model.radius) reach = std::max(reach, std::abs(r));
    if (!(reach > 0.0)) reach = 1.0;
    lo -= reach;
    hi += reach;
  }
  const Eigen::Vector3d d = model.direction();
  const RigidTransform cam_from_world = stage1_camera_from_world();
  std::vector<Eigen::Vector2d> image;
  image.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    image.push_back(project(camera, cam_from_world, Eigen::Vector3d(model.origin + t * d)));
  }
  return fit_line_2d(image);
}

namespace {

struct TrackGuess {
  Eigen::Vector3d center;  // back-projected to unit depth, model frame
  double radius = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double orientation = 0.0;
  bool ellipse = false;
};

Eigen::Vector3d back_project_unit_depth(const PinholeCamera& camera, const Eigen::Vector2d& uv) {
  // Camera sits at z = -1, so depth 1 is the model plane z = 0.
  return {(uv.x() - camera.cx) / camera.fx, (uv.y() - camera.cy) / camera.fy, 0.0};
}

std::vector<TrackGuess> guess_tracks(std::span<const FeatureTrack> tracks, const PinholeCamera& camera) {
  std::vector<TrackGuess> out;
  for (const auto& t : tracks) {
    TrackGuess g;
    const auto px = t.pixels();
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    double spread = 0.0;
    for (const auto& p : px) mean += p;
    mean /= static_cast<double>(px.size());
    for (const auto& p : px) spread = std::max(spread, (p - mean).norm());
    Eigen::Vector2d center = mean;
    double major = spread;
    try {
      const EllipseParams e = conic_params(fit_ellipse_direct(px));
      // Short arcs can produce huge ellipses; only trust plausible ones.
      if (e.semi_major < 20.0 * std::max(spread, 1.0)) {
        center = e.center;
        major = e.semi_major;
        g.semi_major = e.semi_major;
        g.semi_minor = e.semi_minor;
        g.orientation = e.orientation;
        g.ellipse = true;
      }
    } catch (const Error&) {
    }
    g.center = back_project_unit_depth(camera, center);
    g.radius = std::max(major, 1.0) / camera.fx;
    out.push_back(g);
  }
  return out;
}

CoaxialAxisModel model_for_direction(std::span<const TrackGuess> guesses, const Eigen::Vector3d& d) {
  CoaxialAxisModel m;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  for (const auto& g : guesses) origin += g.center;
  origin /= static_cast<double>(guesses.size());
  m.origin = origin;
  const Eigen::Vector3d dn = d.normalized();
  m.theta = std::atan2(-dn.x(), std::hypot(dn.y(), dn.z()));
  m.phi = std::atan2(dn.z(), dn.y());
  for (const auto& g : guesses) {
    m.radius.push_back(g.radius);
    m.offset.push_back((g.center - origin).dot(dn));
  }
  return m;
}

// Axis direction implied by the most eccentric-resolving (largest) ellipse:
// tilt from the axis ratio, image direction along the minor axis.
std::pair<Eigen::Vector3d, Eigen::Vector3d> guess_directions(std::span<const TrackGuess> guesses) {
  const TrackGuess* best = nullptr;
  for (const auto& g : guesses) {
    if (g.ellipse && (!best || g.semi_major > best->semi_major)) best = &g;
  }
  if (!best) return {Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ()};
  const double ratio = std::clamp(best->semi_minor / best->semi_major, 0.0, 1.0);
  const double tilt = std::acos(ratio);
  const Eigen::Vector2d minor_dir(-std::sin(best->orientation), std::cos(best->orientation));
  const double s = std::sin(tilt), c = std::cos(tilt);
  return {Eigen::Vector3d(s * minor_dir.x(), s * minor_dir.y(), c),
          Eigen::Vector3d(s * minor_dir.x(), s * minor_dir.y(), -c)};
}

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

}  // namespace

AxisObservation recover_axis(std::span<const FeatureTrack> tracks, const PinholeCamera& camera,
                             const Stage1Config& config) {
  if (tracks.empty()) throw InvalidArgument("axis recovery needs at least one track");
  for (const auto& t : tracks) {
    if (t.size() < 6) {
      throw InvalidArgument("track " + std::to_string(t.id()) + " has " + std::to_string(t.size()) +
                            " points; ellipse fitting needs at least 6");
    }
  }

  const std::vector<TrackGuess> guesses = guess_tracks(tracks, camera);
  const auto [dir_a, dir_b] = guess_directions(guesses);

  // Start 0 is the literal unit-radius model; 1 and 2 take the two tilt
  // hypotheses from the largest ellipse; the rest draw the axis uniformly on
  // the sphere around the data-scaled model.
  std::size_t next_start = 0;
  const StartSampler sampler = [&](std::mt19937_64& rng) -> Eigen::VectorXd {
    const std::size_t index = next_start++;
    if (index == 0) return CoaxialAxisModel::initial(tracks.size()).to_vector();
    if (index == 1) return model_for_direction(guesses, dir_a).to_vector();
    if (index == 2) return model_for_direction(guesses, dir_b).to_vector();
    return model_for_direction(guesses, random_unit_vector(rng)).to_vector();
  };

  const ResidualFn residual = [&](const Eigen::VectorXd& x) {
    return stage1_residual(CoaxialAxisModel::from_vector(x), tracks, camera, config.circle_samples,
                           config.penalty_px);
  };
  const JacobianFn jacobian = [&](const Eigen::VectorXd& x) { return jacobian_forward_difference(residual, x); };
  const Solver solver = [&](const Eigen::VectorXd& x0) { return levenberg_marquardt(residual, jacobian, x0, config.lm); };

  const RestartOutcome outcome = with_restarts(solver, sampler, config.restarts, config.seed, config.threads);

  const Eigen::VectorXd best_r = residual(outcome.best.x);
  if (best_r.cwiseAbs().maxCoeff() >= config.penalty_px || outcome.converged == 0) {
    throw ConvergenceError("stage-one axis recovery did not converge after " + std::to_string(outcome.count) +
                               " restarts (best residual " + std::to_string(outcome.best.residual_norm) + ")",
                           outcome.best.residual_norm);
  }

  AxisObservation obs;
  obs.model = CoaxialAxisModel::from_vector(outcome.best.x);
  for (double& r : obs.model.radius) r = std::abs(r);
  obs.model.theta = wrap_angle(obs.model.theta);
  obs.model.phi = wrap_angle(obs.model.phi);
  obs.residual = outcome.best.residual_norm;
  obs.converged = outcome.best.converged;
  obs.restarts = outcome.count;
  obs.best_restart = outcome.best_index;
  obs.line = project_model_axis(obs.model, camera, config.axis_line_points);

  const RigidTransform cam_from_world = stage1_camera_from_world();
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    try {
      obs.ellipses.push_back(conic_params(candidate_ellipse(obs.model, j, camera, cam_from_world,
                                                            config.circle_samples)));
    } catch (const Error&) {
      obs.ellipses.push_back(EllipseParams{});
    }
  }
  return obs;
}

}  // namespace axiscal
