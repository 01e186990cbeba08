#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "axiscal/conics.hpp"
#include "axiscal/geometry.hpp"
#include "axiscal/optim.hpp"

namespace axiscal {

struct TrackPoint {
  long frame = 0;
  Eigen::Vector2d uv = Eigen::Vector2d::Zero();
};

/// Image positions of one feature over consecutive frames.
class FeatureTrack {
 public:
  /// Throws InvalidArgument unless frame indices are strictly increasing.
  FeatureTrack(int id, std::vector<TrackPoint> points);

  int id() const { return id_; }
  const std::vector<TrackPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::vector<Eigen::Vector2d> pixels() const;
  /// Sum of distances between consecutive points, in pixels.
  double path_length() const;

 private:
  int id_;
  std::vector<TrackPoint> points_;
};

/// Drops tracks shorter than `min_length` points or whose path length is below
/// `min_motion_px`.
std::vector<FeatureTrack> filter_tracks(std::span<const FeatureTrack> tracks, std::size_t min_length,
                                        double min_motion_px);

/// d = Rx(phi) * Rz(theta) * (0, 1, 0).
Eigen::Vector3d axis_direction(double theta, double phi);

/// Shared-axis circle model: a point on the axis, two direction angles, and one
/// (radius, axial offset) pair per circle. 5 + 2m parameters.
struct CoaxialAxisModel {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  double theta = 0.0;
  double phi = 0.0;
  std::vector<double> radius;
  std::vector<double> offset;

  std::size_t circle_count() const { return radius.size(); }
  std::size_t parameter_count() const { return 5 + 2 * radius.size(); }
  Eigen::Vector3d direction() const { return axis_direction(theta, phi); }
  Eigen::Vector3d center(std::size_t j) const { return origin + offset.at(j) * direction(); }

  /// Layout [x y z theta phi r_0 s_0 r_1 s_1 ...].
  Eigen::VectorXd to_vector() const;
  static CoaxialAxisModel from_vector(const Eigen::VectorXd& v);
  /// Literal starting point: axis (0,0,0,0,0), unit radii, offsets 0.1 * (j + 1).
  static CoaxialAxisModel initial(std::size_t circles);
};

/// `samples` points at uniform angles on circle j (0-based).
std::vector<Eigen::Vector3d> circle_points(const CoaxialAxisModel& model, std::size_t j, std::size_t samples);

/// Stage-one camera: Pose6 (0, 0, -1, 0, 0, 0), i.e. one unit behind the model origin.
RigidTransform stage1_camera_from_world();

struct Stage1Config {
  std::size_t min_track_length = 10;
  double min_motion_px = 5.0;
  std::size_t circle_samples = 64;
  std::size_t restarts = 10;
  std::uint64_t seed = 1;
  double penalty_px = 1e3;
  std::size_t axis_line_points = 11;
  unsigned threads = 1;
  LMOptions lm = [] {
    LMOptions o;
    o.max_iterations = 100;
    o.function_tolerance = 1e-10;
    return o;
  }();
};

/// For each track: sample its circle, project, fit the candidate ellipse, and emit
/// the signed Sampson distance of every observed point. Evaluations that fail
/// (point behind the camera, degenerate fit) yield `penalty_px` per point.
Eigen::VectorXd stage1_residual(const CoaxialAxisModel& model, std::span<const FeatureTrack> tracks,
                                const PinholeCamera& camera, std::size_t circle_samples = 64,
                                double penalty_px = 1e3);

struct AxisObservation {
  Line2D line = Line2D::from_slope_intercept(0.0, 0.0);
  /// Final stage-one residual norm (pixels).
  double residual = 0.0;
  CoaxialAxisModel model;
  /// Candidate ellipse per track at the optimum.
  std::vector<EllipseParams> ellipses;
  bool converged = false;
  std::size_t restarts = 0;
  std::size_t best_restart = 0;
};

/// Projected rotation axis of a fitted model as an image line.
Line2D project_model_axis(const CoaxialAxisModel& model, const PinholeCamera& camera, std::size_t points = 11);

/// Fits the coaxial model to the tracks (which must already be filtered) and
/// returns the image of the recovered rotation axis.
/// Throws InvalidArgument when there are no tracks or a track has fewer than 6
/// points, and ConvergenceError when no restart reaches a penalty-free optimum.
AxisObservation recover_axis(std::span<const FeatureTrack> tracks, const PinholeCamera& camera,
                             const Stage1Config& config = {});

}  // namespace axiscal
