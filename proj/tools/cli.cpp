#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "axiscal/io.hpp"

namespace axiscal::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string camera;
  std::string chain;
  std::vector<std::string> tracks;
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> restarts;
  std::optional<double> noise_var;
  std::optional<std::size_t> trials;
  bool force = false;
  std::optional<std::size_t> min_track_len;
  std::optional<double> min_motion_px;
  unsigned threads = 1;
  bool quiet = false;
};

struct LoadedMeasurement {
  std::string file;
  TrackFile data;
};

std::vector<fs::path> track_paths(const std::vector<std::string>& args) {
  std::vector<fs::path> paths;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      paths.insert(paths.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      paths.push_back(p);
    } else {
      throw ParseError(a + ": no such file or directory");
    }
  }
  return paths;
}

std::vector<LoadedMeasurement> load_measurements(const std::vector<std::string>& args) {
  std::vector<LoadedMeasurement> out;
  for (const auto& p : track_paths(args)) {
    try {
      out.push_back({p.string(), track_file_from_json(read_json_file(p))});
    } catch (const ParseError& e) {
      const std::string what = e.what();
      if (what.rfind(p.string(), 0) == 0) throw;
      throw ParseError(p.string() + ": " + what);
    }
  }
  return out;
}

ScenarioConfig load_scenario(const Options& o) {
  ScenarioConfig cfg = o.scenario.empty() ? reference_scenario() : scenario_from_json(read_json_file(o.scenario));
  if (o.seed) cfg.seed = *o.seed;
  if (o.noise_var) cfg.noise_var = *o.noise_var;
  if (o.trials) cfg.trials = *o.trials;
  if (o.restarts) cfg.stage2.restarts = *o.restarts;
  if (o.min_track_len) cfg.stage1.min_track_length = *o.min_track_len;
  if (o.min_motion_px) cfg.stage1.min_motion_px = *o.min_motion_px;
  cfg.stage2.force = o.force;
  cfg.threads = o.threads;
  return cfg;
}

KinematicChain load_chain_file(const std::string& path) {
  try {
    return load_chain(read_json_file(path));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ParseError(path + ": " + what);
  }
}

PinholeCamera load_camera_file(const std::string& path) {
  try {
    return camera_from_json(read_json_file(path));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw ParseError(path + ": " + what);
  }
}

std::string level_name(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "montecarlo_var_%g.csv", v);
  return buf;
}

void print_validation(const ValidationReport& report, std::ostream& out) {
  out << (report.passed ? "PASS" : "FAIL") << "\n";
  for (const auto& i : report.issues) out << "  " << i.code << ": " << i.message << "\n";
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  const ScenarioConfig cfg = load_scenario(o);
  std::vector<SynthesizedMeasurement> ms;
  for (std::size_t i = 0; i < cfg.arm_poses.size(); ++i) ms.push_back(synthesize_measurement(cfg, i));

  const fs::path root(o.out);
  fs::create_directories(root / "tracks");
  Json truth;
  truth["camera_pose"] = to_json(cfg.camera_pose);
  truth["noise_var"] = cfg.noise_var;
  truth["seed"] = cfg.seed;
  Json entries = Json::array();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "measurement_%03zu.json", i);
    TrackFile f{ms[i].joint_angles, add_noise(ms[i].tracks, cfg.noise_var, derive_seed(cfg.seed, i, 0x51))};
    write_json_file(root / "tracks" / name, to_json(f));
    entries.push_back(Json{{"file", std::string("tracks/") + name},
                           {"joint_angles", ms[i].joint_angles},
                           {"axis_line", to_json(ms[i].true_line)}});
  }
  truth["measurements"] = entries;
  write_json_file(root / "ground_truth.json", truth);
  write_json_file(root / "camera.json", to_json(cfg.camera));
  write_json_file(root / "chain.json", to_json(cfg.chain));
  if (!o.quiet) err << "wrote " << ms.size() << " track files to " << (root / "tracks").string() << "\n";
  out << truth.dump(2) << "\n";
  return kSuccess;
}

int cmd_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.camera.empty() || o.chain.empty() || o.tracks.empty()) {
    throw ParseError("calibrate needs --camera, --chain and --tracks");
  }
  const PinholeCamera camera = load_camera_file(o.camera);
  const KinematicChain chain = load_chain_file(o.chain);
  const auto loaded = load_measurements(o.tracks);

  Stage1Config s1;
  if (o.min_track_len) s1.min_track_length = *o.min_track_len;
  if (o.min_motion_px) s1.min_motion_px = *o.min_motion_px;
  if (o.seed) s1.seed = *o.seed;
  s1.threads = o.threads;
  Stage2Config s2;
  if (o.seed) s2.seed = derive_seed(*o.seed, 2);
  if (o.restarts) s2.restarts = *o.restarts;
  s2.force = o.force;
  s2.threads = o.threads;

  auto write_report = [&](const Json& doc) {
    if (!o.out.empty()) {
      fs::create_directories(o.out);
      write_json_file(fs::path(o.out) / "calibration.json", doc);
    }
    out << doc.dump(2) << "\n";
  };
  auto reject = [&](const ValidationReport& report) {
    write_report(Json{{"status", "validation_failed"}, {"validation", to_json(report)}});
    err << "validation failed:\n";
    print_validation(report, err);
    return kValidationFailure;
  };

  std::vector<JointAngles> all_angles;
  for (const auto& m : loaded) all_angles.push_back(m.data.joint_angles);
  const ValidationReport upfront = validate_measurement_set(all_angles, chain, s2.coincidence_threshold_m);
  if (!upfront.passed && !o.force) return reject(upfront);

  std::vector<Measurement> measurements;
  Json excluded = Json::array();
  for (const auto& m : loaded) {
    try {
      const auto tracks = filter_tracks(m.data.tracks, s1.min_track_length, s1.min_motion_px);
      measurements.push_back({m.data.joint_angles, recover_axis(tracks, camera, s1)});
    } catch (const Error& e) {
      err << "warning: " << m.file << " excluded: " << e.what() << "\n";
      excluded.push_back(Json{{"file", m.file}, {"reason", e.what()}});
    }
  }
  if (measurements.size() < 3 && !o.force) {
    std::vector<JointAngles> kept;
    for (const auto& m : measurements) kept.push_back(m.joint_angles);
    return reject(validate_measurement_set(kept, chain, s2.coincidence_threshold_m));
  }
  if (measurements.empty()) throw DegenerateConfiguration("no measurement survived axis recovery");

  CalibrationResult result;
  try {
    result = estimate_pose(measurements, chain, camera, s2);
  } catch (const DegenerateConfiguration&) {
    std::vector<JointAngles> kept;
    for (const auto& m : measurements) kept.push_back(m.joint_angles);
    return reject(validate_measurement_set(kept, chain, s2.coincidence_threshold_m));
  }
  Json doc = calibration_report(result);
  Json lines = Json::array();
  for (const auto& m : measurements) {
    lines.push_back(Json{{"line", to_json(m.axis.line)}, {"stage1_residual", m.axis.residual}});
  }
  doc["axis_lines"] = lines;
  doc["excluded"] = excluded;
  write_report(doc);
  if (result.covariance_error.size()) err << "warning: " << result.covariance_error << "\n";
  return kSuccess;
}

int cmd_montecarlo(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out.empty()) throw ParseError("montecarlo needs --out");
  ScenarioConfig cfg = load_scenario(o);
  std::vector<double> levels = cfg.noise_levels;
  if (o.noise_var || levels.empty()) levels = {cfg.noise_var};

  const fs::path root(o.out);
  fs::create_directories(root);
  Json summaries = Json::array();
  for (double v : levels) {
    auto progress = [&](std::size_t done, std::size_t total) {
      if (!o.quiet) err << "noise_var " << v << ": trial " << done << "/" << total << "\n";
    };
    const MonteCarloResult r = monte_carlo(cfg, v, progress);
    write_text_file(root / level_name(v), monte_carlo_csv(r));
    Json s = to_json(r.summary);
    s["csv"] = level_name(v);
    summaries.push_back(s);
  }
  const Json doc{{"seed", cfg.seed}, {"trials", cfg.trials}, {"levels", summaries}};
  write_json_file(root / "summary.json", doc);
  out << doc.dump(2) << "\n";
  return kSuccess;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream&) {
  ValidationReport report;
  if (!o.scenario.empty()) {
    const ScenarioConfig cfg = load_scenario(o);
    report = validate_measurement_set(cfg.arm_poses, cfg.chain, cfg.stage2.coincidence_threshold_m);
  } else {
    if (o.chain.empty()) throw ParseError("validate needs --scenario or --chain with --tracks");
    const KinematicChain chain = load_chain_file(o.chain);
    std::vector<JointAngles> angles;
    for (const auto& m : load_measurements(o.tracks)) angles.push_back(m.data.joint_angles);
    report = validate_measurement_set(angles, chain, Stage2Config{}.coincidence_threshold_m);
  }
  print_validation(report, out);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_json_file(fs::path(o.out) / "validation.json", to_json(report));
  }
  return report.passed ? kSuccess : kValidationFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Camera-to-arm calibration from rotating feature tracks", "axiscal"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--seed", o.seed, "Random seed");
    c->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    c->add_flag("--quiet", o.quiet, "Suppress progress output");
  };
  auto add_stage_options = [&](CLI::App* c) {
    c->add_option("--restarts", o.restarts, "Stage-two restart count")->check(CLI::PositiveNumber);
    c->add_option("--min-track-len", o.min_track_len, "Minimum points per track");
    c->add_option("--min-motion-px", o.min_motion_px, "Minimum track path length in pixels");
  };

  auto* simulate = app.add_subcommand("simulate", "Write synthetic track files and ground truth");
  add_common(simulate);
  simulate->add_option("--scenario", o.scenario, "Scenario JSON (default: built-in reference)");
  simulate->add_option("--noise-var", o.noise_var, "Pixel noise variance")->check(CLI::NonNegativeNumber);
  simulate->get_option("--out")->required();

  auto* calibrate = app.add_subcommand("calibrate", "Estimate the camera pose from track files");
  add_common(calibrate);
  add_stage_options(calibrate);
  calibrate->add_option("--camera", o.camera, "Camera intrinsics JSON")->required();
  calibrate->add_option("--chain", o.chain, "Kinematic chain JSON")->required();
  calibrate->add_option("--tracks", o.tracks, "Track files or directories")->required();
  calibrate->add_flag("--force", o.force, "Run even when validation fails");

  auto* montecarlo = app.add_subcommand("montecarlo", "Run the noise Monte Carlo study");
  add_common(montecarlo);
  add_stage_options(montecarlo);
  montecarlo->add_option("--scenario", o.scenario, "Scenario JSON (default: built-in reference)");
  montecarlo->add_option("--noise-var", o.noise_var, "Single noise variance instead of the scenario's levels")
      ->check(CLI::NonNegativeNumber);
  montecarlo->add_option("--trials", o.trials, "Trials per noise level")->check(CLI::PositiveNumber);
  montecarlo->get_option("--out")->required();

  auto* validate = app.add_subcommand("validate", "Check a measurement set for degeneracy");
  add_common(validate);
  validate->add_option("--scenario", o.scenario, "Scenario JSON");
  validate->add_option("--camera", o.camera, "Camera intrinsics JSON (ignored)");
  validate->add_option("--chain", o.chain, "Kinematic chain JSON");
  validate->add_option("--tracks", o.tracks, "Track files or directories");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out, err);
    if (calibrate->parsed()) return cmd_calibrate(o, out, err);
    if (montecarlo->parsed()) return cmd_montecarlo(o, out, err);
    return cmd_validate(o, out, err);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kFailure;
  } catch (const DegenerateConfiguration& e) {
    err << "degenerate configuration: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const GeometryError& e) {
    err << "geometry error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace axiscal::cli
