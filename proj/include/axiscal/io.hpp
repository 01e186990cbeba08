#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "axiscal/axis_recovery.hpp"
#include "axiscal/kinematics.hpp"
#include "axiscal/pose_estimation.hpp"
#include "axiscal/sim.hpp"

namespace axiscal {

using Json = nlohmann::ordered_json;

/// Reads and parses a JSON file. ParseError messages name the file and, for
/// syntax errors, the byte offset.
Json read_json_file(const std::filesystem::path& path);
/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

Pose6 pose_from_json(const Json& j);
Json to_json(const Pose6& p);

/// {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..}
PinholeCamera camera_from_json(const Json& j);
Json to_json(const PinholeCamera& c);

/// {"links":[{"pose":{x,y,z,phi,theta,psi}}, ...]}
KinematicChain load_chain(const Json& j);
/// Stores each link through transform_to_pose.
Json to_json(const KinematicChain& chain);

/// One measurement's worth of tracks:
/// {"joint_angles":[...], "tracks":[{"id":..,"points":[[frame,u,v],...]},...]}
struct TrackFile {
  JointAngles joint_angles;
  std::vector<FeatureTrack> tracks;
};

TrackFile track_file_from_json(const Json& j);
Json to_json(const TrackFile& f);

Json to_json(const Line2D& line);
Json to_json(const ValidationReport& report);

/// {"pose":{..},"variance":[6],"residual_norm":..,"restarts":{..},"validation":{..}}
Json calibration_report(const CalibrationResult& result);

/// Scenario file. "camera" and "chain" are inline objects; "camera_pose" is a
/// pose object; optional "stage1"/"stage2" override solver settings.
ScenarioConfig scenario_from_json(const Json& j);
Json to_json(const ScenarioConfig& config);

Json to_json(const MonteCarloSummary& summary);

}  // namespace axiscal
