#include "axiscal/io.hpp"

#include <fstream>
#include <sstream>

namespace axiscal {

namespace {

const Json& field(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object()) throw ParseError(context + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(context + ": missing field '" + key + "'");
  return *it;
}

double number(const Json& j, const char* key, const std::string& context) {
  const Json& v = field(j, key, context);
  if (!v.is_number()) throw ParseError(context + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& context) {
  return j.contains(key) ? number(j, key, context) : fallback;
}

std::vector<double> number_array(const Json& v, const std::string& context) {
  if (!v.is_array()) throw ParseError(context + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ParseError(context + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

template <typename Fn>
auto rethrow_as_parse_error(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(context + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": JSON syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(path.string() + ": write failed");
}

void write_json_file(const std::filesystem::path& path, const Json& doc) { write_text_file(path, doc.dump(2) + "\n"); }

Pose6 pose_from_json(const Json& j) {
  const std::string ctx = "pose";
  return wrapped(Pose6{number(j, "x", ctx), number(j, "y", ctx), number(j, "z", ctx), number(j, "phi", ctx),
                       number(j, "theta", ctx), number(j, "psi", ctx)});
}

Json to_json(const Pose6& p) {
  return Json{{"x", p.x}, {"y", p.y}, {"z", p.z}, {"phi", p.phi}, {"theta", p.theta}, {"psi", p.psi}};
}

PinholeCamera camera_from_json(const Json& j) {
  const std::string ctx = "camera";
  return rethrow_as_parse_error(ctx, [&] {
    const double w = number(j, "width", ctx), h = number(j, "height", ctx);
    if (w != std::floor(w) || h != std::floor(h)) throw ParseError(ctx + ": width and height must be integers");
    return PinholeCamera::make(number(j, "fx", ctx), number(j, "fy", ctx), number(j, "cx", ctx), number(j, "cy", ctx),
                               static_cast<int>(w), static_cast<int>(h));
  });
}

Json to_json(const PinholeCamera& c) {
  return Json{{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

KinematicChain load_chain(const Json& j) {
  return rethrow_as_parse_error("chain", [&] {
    const Json& links = field(j, "links", "chain");
    if (!links.is_array()) throw ParseError("chain: 'links' must be an array");
    if (links.empty()) throw ParseError("chain: 'links' must not be empty");
    std::vector<KinematicLink> out;
    for (std::size_t i = 0; i < links.size(); ++i) {
      const std::string ctx = "chain link " + std::to_string(i);
      const Pose6 p = rethrow_as_parse_error(ctx, [&] { return pose_from_json(field(links[i], "pose", ctx)); });
      out.push_back({pose_to_transform(p)});
    }
    return KinematicChain(std::move(out));
  });
}

Json to_json(const KinematicChain& chain) {
  Json links = Json::array();
  for (const auto& l : chain.links()) links.push_back(Json{{"pose", to_json(transform_to_pose(l.fixed))}});
  return Json{{"links", links}};
}

TrackFile track_file_from_json(const Json& j) {
  return rethrow_as_parse_error("track file", [&] {
    TrackFile f;
    f.joint_angles = number_array(field(j, "joint_angles", "track file"), "joint_angles");
    const Json& tracks = field(j, "tracks", "track file");
    if (!tracks.is_array()) throw ParseError("track file: 'tracks' must be an array");
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const std::string ctx = "track " + std::to_string(i);
      const Json& t = tracks[i];
      const Json& id = field(t, "id", ctx);
      if (!id.is_number_integer()) throw ParseError(ctx + ": 'id' must be an integer");
      const Json& points = field(t, "points", ctx);
      if (!points.is_array()) throw ParseError(ctx + ": 'points' must be an array");
      std::vector<TrackPoint> pts;
      pts.reserve(points.size());
      for (const auto& p : points) {
        const auto v = number_array(p, ctx + " point");
        if (v.size() != 3) throw ParseError(ctx + ": each point must be [frame, u, v]");
        if (v[0] != std::floor(v[0])) throw ParseError(ctx + ": frame index must be an integer");
        pts.push_back({static_cast<long>(v[0]), Eigen::Vector2d(v[1], v[2])});
      }
      f.tracks.emplace_back(id.get<int>(), std::move(pts));
    }
    return f;
  });
}

Json to_json(const TrackFile& f) {
  Json tracks = Json::array();
  for (const auto& t : f.tracks) {
    Json pts = Json::array();
    for (const auto& p : t.points()) pts.push_back(Json::array({p.frame, p.uv.x(), p.uv.y()}));
    tracks.push_back(Json{{"id", t.id()}, {"points", pts}});
  }
  return Json{{"joint_angles", f.joint_angles}, {"tracks", tracks}};
}

Json to_json(const Line2D& line) {
  Json j{{"normal", Json::array({line.nx(), line.ny(), line.c()})}};
  if (line.has_slope_intercept()) {
    j["m"] = line.slope();
    j["b"] = line.intercept();
  }
  return j;
}

Json to_json(const ValidationReport& report) {
  Json issues = Json::array();
  for (const auto& i : report.issues) issues.push_back(Json{{"code", i.code}, {"message", i.message}});
  return Json{{"passed", report.passed}, {"issues", issues}};
}

Json calibration_report(const CalibrationResult& result) {
  Json doc;
  doc["pose"] = to_json(result.pose);
  if (result.variance) {
    doc["variance"] = std::vector<double>(result.variance->data(), result.variance->data() + 6);
  } else {
    doc["variance"] = nullptr;
    doc["covariance_error"] = result.covariance_error;
  }
  doc["residual_norm"] = result.residual_norm;
  doc["restarts"] = Json{{"count", result.restarts.count},
                         {"converged", result.restarts.converged},
                         {"failed", result.restarts.failed},
                         {"best_index", result.restarts.best_index},
                         {"iterations", result.solve.iterations},
                         {"termination", to_string(result.solve.termination)}};
  doc["validation"] = to_json(result.validation);
  return doc;
}

namespace {

void apply_lm(const Json& j, LMOptions& lm, const std::string& ctx) {
  lm.max_iterations = static_cast<int>(number_or(j, "max_iterations", lm.max_iterations, ctx));
  lm.initial_damping = number_or(j, "initial_damping", lm.initial_damping, ctx);
  lm.gradient_tolerance = number_or(j, "gradient_tolerance", lm.gradient_tolerance, ctx);
  lm.step_tolerance = number_or(j, "step_tolerance", lm.step_tolerance, ctx);
  lm.residual_tolerance = number_or(j, "residual_tolerance", lm.residual_tolerance, ctx);
  lm.function_tolerance = number_or(j, "function_tolerance", lm.function_tolerance, ctx);
}

}  // namespace

ScenarioConfig scenario_from_json(const Json& j) {
  return rethrow_as_parse_error("scenario", [&] {
    const std::string ctx = "scenario";
    ScenarioConfig cfg{
        .camera = camera_from_json(field(j, "camera", ctx)),
        .chain = load_chain(field(j, "chain", ctx)),
        .camera_pose = pose_from_json(field(j, "camera_pose", ctx)),
    };
    const Json& poses = field(j, "arm_poses", ctx);
    if (!poses.is_array()) throw ParseError(ctx + ": 'arm_poses' must be an array");
    for (const auto& p : poses) {
      cfg.arm_poses.push_back(number_array(p, "arm pose"));
      if (cfg.arm_poses.back().size() != cfg.chain.size()) {
        throw ParseError(ctx + ": arm pose has " + std::to_string(cfg.arm_poses.back().size()) +
                         " angles for a chain of " + std::to_string(cfg.chain.size()));
      }
    }
    const Json& feats = field(j, "features", ctx);
    if (!feats.is_array()) throw ParseError(ctx + ": 'features' must be an array");
    for (const auto& f : feats) {
      cfg.features.push_back({number(f, "radius", "feature"), number(f, "offset", "feature"),
                              number_or(f, "phase", 0.0, "feature")});
    }
    cfg.frames = static_cast<std::size_t>(number_or(j, "frames", static_cast<double>(cfg.frames), ctx));
    if (j.contains("sweep_deg")) cfg.sweep_rad = number(j, "sweep_deg", ctx) * std::numbers::pi / 180.0;
    cfg.noise_var = number_or(j, "noise_var", cfg.noise_var, ctx);
    if (j.contains("noise_levels")) cfg.noise_levels = number_array(j["noise_levels"], "noise_levels");
    cfg.trials = static_cast<std::size_t>(number_or(j, "trials", static_cast<double>(cfg.trials), ctx));
    cfg.seed = static_cast<std::uint64_t>(number_or(j, "seed", static_cast<double>(cfg.seed), ctx));
    if (j.contains("stage1")) {
      const Json& s = j["stage1"];
      auto& s1 = cfg.stage1;
      s1.min_track_length = static_cast<std::size_t>(number_or(s, "min_track_length", double(s1.min_track_length), "stage1"));
      s1.min_motion_px = number_or(s, "min_motion_px", s1.min_motion_px, "stage1");
      s1.circle_samples = static_cast<std::size_t>(number_or(s, "circle_samples", double(s1.circle_samples), "stage1"));
      s1.restarts = static_cast<std::size_t>(number_or(s, "restarts", double(s1.restarts), "stage1"));
      if (s.contains("lm")) apply_lm(s["lm"], s1.lm, "stage1.lm");
    }
    if (j.contains("stage2")) {
      const Json& s = j["stage2"];
      auto& s2 = cfg.stage2;
      s2.restarts = static_cast<std::size_t>(number_or(s, "restarts", double(s2.restarts), "stage2"));
      s2.position_box_m = number_or(s, "position_box_m", s2.position_box_m, "stage2");
      if (s.contains("z_values")) s2.z_values = number_array(s["z_values"], "stage2.z_values");
      s2.coincidence_threshold_m = number_or(s, "coincidence_threshold_m", s2.coincidence_threshold_m, "stage2");
      if (s.contains("lm")) apply_lm(s["lm"], s2.lm, "stage2.lm");
    }
    return cfg;
  });
}

Json to_json(const ScenarioConfig& cfg) {
  Json features = Json::array();
  for (const auto& f : cfg.features) features.push_back(Json{{"radius", f.radius}, {"offset", f.offset}, {"phase", f.phase}});
  Json doc;
  doc["camera"] = to_json(cfg.camera);
  doc["chain"] = to_json(cfg.chain);
  doc["camera_pose"] = to_json(cfg.camera_pose);
  doc["arm_poses"] = cfg.arm_poses;
  doc["features"] = features;
  doc["frames"] = cfg.frames;
  doc["sweep_deg"] = cfg.sweep_rad * 180.0 / std::numbers::pi;
  doc["noise_var"] = cfg.noise_var;
  doc["noise_levels"] = cfg.noise_levels;
  doc["trials"] = cfg.trials;
  doc["seed"] = cfg.seed;
  doc["stage1"] = Json{{"min_track_length", cfg.stage1.min_track_length},
                       {"min_motion_px", cfg.stage1.min_motion_px},
                       {"circle_samples", cfg.stage1.circle_samples},
                       {"restarts", cfg.stage1.restarts}};
  doc["stage2"] = Json{{"restarts", cfg.stage2.restarts},
                       {"position_box_m", cfg.stage2.position_box_m},
                       {"z_values", cfg.stage2.z_values},
                       {"coincidence_threshold_m", cfg.stage2.coincidence_threshold_m}};
  return doc;
}

Json to_json(const MonteCarloSummary& s) {
  auto vec6 = [](const Vector6d& v) { return std::vector<double>(v.data(), v.data() + 6); };
  return Json{{"noise_var", s.noise_var},
              {"trials", s.trials},
              {"failures", s.failures},
              {"pose_error_mean", vec6(s.pose_mean)},
              {"pose_error_std", vec6(s.pose_std)},
              {"line_dm_std", s.dm_std},
              {"line_db_std", s.db_std},
              {"line_correlation", s.line_correlation}};
}

}  // namespace axiscal
