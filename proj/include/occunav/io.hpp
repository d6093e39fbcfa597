#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "occunav/geometry.hpp"

namespace occunav {

/// Raised for malformed, truncated, or missing input data. The CLI maps it
/// to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rig file: JSON, rotations row-major and camera-to-ego.
nlohmann::json rig_to_json(const CameraRig& rig);
CameraRig rig_from_json(const nlohmann::json& j);
CameraRig load_rig(const std::filesystem::path& path);
void save_rig(const CameraRig& rig, const std::filesystem::path& path);

// Trajectory file: CSV with header `t,x,y,yaw,speed,reverse`, or JSON lines
// with the same keys (selected by a .jsonl / .ndjson extension, for reading and
// writing).
Trajectory read_trajectory(const std::filesystem::path& path,
                           double rate_hz = Trajectory::kDefaultRateHz);
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);
std::string trajectory_to_csv(const Trajectory& traj);
Trajectory trajectory_from_csv(const std::string& text,
                               double rate_hz = Trajectory::kDefaultRateHz);

nlohmann::json load_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace occunav
