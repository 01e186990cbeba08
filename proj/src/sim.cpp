#include "axiscal/sim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

namespace axiscal {

namespace {

KinematicChain reference_chain() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  const std::vector<Pose6> poses{
      {0.0, 0.0, 0.2755, 0.0, 0.0, 0.0},       // base column
      {0.0, 0.0, 0.0, half_pi, 0.0, 0.0},      // shoulder
      {0.41, 0.0, 0.0, 0.0, 0.0, 0.0},         // elbow, upper arm along x
      {0.2073, 0.0, 0.0, half_pi, 0.0, half_pi},  // forearm roll
      {0.0, 0.0, 0.1, half_pi, 0.0, 0.0},      // wrist pitch, on the forearm axis
      {0.0, 0.16, 0.0, -half_pi, 0.0, 0.0},    // wrist rotation, axis through the wrist centre
  };
  std::vector<KinematicLink> links;
  for (const auto& p : poses) links.push_back({pose_to_transform(p)});
  return KinematicChain(std::move(links));
}

}  // namespace

ScenarioConfig reference_scenario() {
  ScenarioConfig cfg{
      .camera = PinholeCamera::make(525.0, 525.0, 320.0, 240.0, 640, 480),
      .chain = reference_chain(),
      .camera_pose = {0.95, -0.80, 1.00, -1.90, 0.05, 0.58},
      .arm_poses =
          {
              {-3.1416, 2.9003, -1.2582, 2.8822, 1.5077, 0.0},
              {-3.0493, 2.3509, 0.1926, -1.597, -0.3788, 0.0},
              {-0.1853, 0.455, 1.2552, -1.6109, 1.6108, 0.0},
              {-0.2096, 1.1255, -1.2741, -2.0407, 1.5922, 0.0},
              {0.2861, 0.1264, 1.6155, 2.808, -1.6861, 0.0},
              {0.1526, 0.0493, 1.1323, -2.1592, 1.1645, 0.0},
          },
      .features = {{0.05, 0.0, 0.0}, {0.07, 0.04, 2.1}, {0.09, 0.08, 4.2}},
  };
  cfg.noise_levels = {0.1, 0.5, 1.0, 1.5};
  return cfg;
}

Line2D true_axis_line(const ScenarioConfig& config, const JointAngles& angles) {
  const RigidTransform camera_from_world = pose_to_transform(config.camera_pose).inverse();
  const std::vector<double> z{0.0, 0.1};
  std::vector<Eigen::Vector2d> image;
  for (const auto& p : axis_test_points(config.chain, angles, z)) {
    image.push_back(project(config.camera, camera_from_world, p));
  }
  return fit_line_2d(image);
}

SynthesizedMeasurement synthesize_measurement(const ScenarioConfig& config, std::size_t index) {
  if (index >= config.arm_poses.size()) throw InvalidArgument("arm pose index out of range");
  if (config.frames < 2) throw InvalidArgument("need at least two frames per rotation");
  const JointAngles& base = config.arm_poses[index];
  const RigidTransform camera_from_world = pose_to_transform(config.camera_pose).inverse();

  SynthesizedMeasurement out;
  out.joint_angles = base;
  try {
    out.true_line = true_axis_line(config, base);
  } catch (const GeometryError& e) {
    throw GeometryError("arm pose " + std::to_string(index) + ": " + e.what());
  }

  std::vector<RigidTransform> end_frames;
  end_frames.reserve(config.frames);
  JointAngles angles = base;
  for (std::size_t f = 0; f < config.frames; ++f) {
    angles.back() = base.back() + config.sweep_rad * static_cast<double>(f) / static_cast<double>(config.frames - 1);
    end_frames.push_back(forward_kinematics(config.chain, angles));
  }

  for (std::size_t k = 0; k < config.features.size(); ++k) {
    const FeatureSpec& feat = config.features[k];
    const Eigen::Vector3d local(feat.radius * std::cos(feat.phase), feat.radius * std::sin(feat.phase), feat.offset);
    std::vector<TrackPoint> pts;
    pts.reserve(config.frames);
    for (std::size_t f = 0; f < config.frames; ++f) {
      Eigen::Vector2d uv;
      try {
        uv = project(config.camera, camera_from_world, end_frames[f].apply(local));
      } catch (const GeometryError&) {
        throw GeometryError("arm pose " + std::to_string(index) + ": feature " + std::to_string(k) +
                            " is behind the camera at frame " + std::to_string(f));
      }
      if (!config.camera.contains(uv)) {
        throw GeometryError("arm pose " + std::to_string(index) + ": feature " + std::to_string(k) +
                            " leaves the image at frame " + std::to_string(f));
      }
      pts.push_back({static_cast<long>(f), uv});
    }
    out.tracks.emplace_back(static_cast<int>(k), std::move(pts));
  }
  return out;
}

std::vector<FeatureTrack> add_noise(std::span<const FeatureTrack> tracks, double noise_var, std::uint64_t seed) {
  if (!(noise_var >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
  std::vector<FeatureTrack> out;
  out.reserve(tracks.size());
  if (noise_var == 0.0) {
    out.assign(tracks.begin(), tracks.end());
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
  for (const auto& t : tracks) {
    std::vector<TrackPoint> pts = t.points();
    for (auto& p : pts) {
      p.uv.x() += noise(rng);
      p.uv.y() += noise(rng);
    }
    out.emplace_back(t.id(), std::move(pts));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

namespace {

enum SeedStream : std::uint64_t { kNoise = 1, kStage1 = 2, kStage2 = 3 };

ErrorSample run_trial(const ScenarioConfig& config, std::span<const SynthesizedMeasurement> clean, double noise_var,
                      std::size_t trial) {
  ErrorSample sample;
  sample.trial = trial;
  try {
    std::vector<Measurement> measurements;
    for (std::size_t k = 0; k < clean.size(); ++k) {
      const auto noisy = add_noise(clean[k].tracks, noise_var, derive_seed(config.seed, trial, kNoise * 1000 + k));
      const auto kept = filter_tracks(noisy, config.stage1.min_track_length, config.stage1.min_motion_px);
      Stage1Config s1 = config.stage1;
      s1.threads = 1;
      s1.seed = derive_seed(config.seed, trial, kStage1 * 1000 + k);
      AxisObservation obs = recover_axis(kept, config.camera, s1);
      sample.dm.push_back(obs.line.slope() - clean[k].true_line.slope());
      sample.db.push_back(obs.line.intercept() - clean[k].true_line.intercept());
      sample.stage1_residual.push_back(obs.residual);
      measurements.push_back({clean[k].joint_angles, std::move(obs), 1.0});
    }
    Stage2Config s2 = config.stage2;
    s2.threads = 1;
    s2.seed = derive_seed(config.seed, trial, kStage2);
    const CalibrationResult result = estimate_pose(measurements, config.chain, config.camera, s2);
    Vector6d err = result.pose.vector() - config.camera_pose.vector();
    for (int i = 3; i < 6; ++i) err(i) = wrap_angle(err(i));
    sample.pose_error = err;
    sample.ok = true;
  } catch (const Error& e) {
    sample.ok = false;
    sample.failure = e.what();
  }
  return sample;
}

double stddev(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

MonteCarloSummary summarize(std::span<const ErrorSample> samples, double noise_var) {
  MonteCarloSummary s;
  s.noise_var = noise_var;
  s.trials = samples.size();
  std::size_t measurements = 0;
  for (const auto& e : samples) {
    if (!e.ok) ++s.failures;
    else measurements = std::max(measurements, e.dm.size());
  }

  for (int c = 0; c < 6; ++c) {
    std::vector<double> v;
    for (const auto& e : samples) {
      if (e.ok) v.push_back(e.pose_error(c));
    }
    s.pose_mean(c) = mean_of(v);
    s.pose_std(c) = stddev(v, s.pose_mean(c));
  }
  for (std::size_t k = 0; k < measurements; ++k) {
    std::vector<double> dm, db;
    for (const auto& e : samples) {
      if (e.ok) {
        dm.push_back(e.dm[k]);
        db.push_back(e.db[k]);
      }
    }
    const double mm = mean_of(dm), mb = mean_of(db);
    const double sm = stddev(dm, mm), sb = stddev(db, mb);
    double cov = 0.0;
    for (std::size_t i = 0; i < dm.size(); ++i) cov += (dm[i] - mm) * (db[i] - mb);
    cov = dm.size() > 1 ? cov / static_cast<double>(dm.size() - 1) : 0.0;
    s.dm_std.push_back(sm);
    s.db_std.push_back(sb);
    s.line_correlation.push_back(sm > 0.0 && sb > 0.0 ? cov / (sm * sb) : 0.0);
  }
  return s;
}

MonteCarloResult monte_carlo(const ScenarioConfig& config, double noise_var,
                             const std::function<void(std::size_t, std::size_t)>& progress) {
  if (!(noise_var >= 0.0)) throw InvalidArgument("noise variance must be non-negative");
  const ValidationReport validation =
      validate_measurement_set(config.arm_poses, config.chain, config.stage2.coincidence_threshold_m);
  if (!validation.passed && !config.stage2.force) {
    throw DegenerateConfiguration("scenario fails measurement-set validation: " + validation.issues.front().message);
  }

  std::vector<SynthesizedMeasurement> clean;
  for (std::size_t k = 0; k < config.arm_poses.size(); ++k) clean.push_back(synthesize_measurement(config, k));

  MonteCarloResult result;
  result.samples.resize(config.trials);
  std::size_t done = 0;
  std::mutex progress_mutex;
  parallel_for(config.trials, config.threads, [&](std::size_t t) {
    result.samples[t] = run_trial(config, clean, noise_var, t);
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(++done, config.trials);
    }
  });

  result.summary = summarize(result.samples, noise_var);
  if (2 * result.summary.failures > config.trials) {
    throw ConvergenceError("Monte Carlo run failed: " + std::to_string(result.summary.failures) + " of " +
                               std::to_string(config.trials) + " trials did not converge",
                           std::numeric_limits<double>::infinity());
  }
  return result;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string monte_carlo_csv(const MonteCarloResult& result) {
  std::size_t measurements = 0;
  for (const auto& s : result.samples) measurements = std::max(measurements, s.dm.size());
  std::ostringstream out;
  out << "trial,noise_var";
  for (std::size_t k = 0; k < measurements; ++k) out << ",dm_" << k << ",db_" << k;
  out << ",dx,dy,dz,dphi,dtheta,dpsi\n";
  for (const auto& s : result.samples) {
    out << s.trial << ',' << fmt_double(result.summary.noise_var);
    for (std::size_t k = 0; k < measurements; ++k) {
      if (s.ok) out << ',' << fmt_double(s.dm[k]) << ',' << fmt_double(s.db[k]);
      else out << ",nan,nan";
    }
    for (int c = 0; c < 6; ++c) out << ',' << (s.ok ? fmt_double(s.pose_error(c)) : std::string("nan"));
    out << '\n';
  }
  return out.str();
}

}  // namespace axiscal
