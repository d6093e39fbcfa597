#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "occunav/metrics.hpp"
#include "occunav/occupancy.hpp"
#include "occunav/planner.hpp"
#include "occunav/reward.hpp"
#include "occunav/rollout.hpp"

namespace occunav {

// ---- synthetic road scenes --------------------------------------------------

/// Box obstacle moving at constant velocity from `center` at t = 0.
struct ObstacleSpec {
  std::string label = "car";
  Eigen::Vector2d center{0.0, 0.0};
  Eigen::Vector3d size{4.5, 1.9, 1.6};
  double yaw = 0.0;
  Eigen::Vector2d velocity{0.0, 0.0};
};

/// Straight road along +x: drivable for |y| <= road_half_width, sidewalk
/// beyond; ground voxels form the layer just below z = 0.
struct RoadSceneSpec {
  GridGeometry geometry{Vector3d(-10.0, -12.0, -0.4), 0.4, {250, 60, 9}};
  double road_half_width = 6.0;
  std::vector<ObstacleSpec> obstacles;
  double frame_rate_hz = 4.0;
  std::size_t n_frames = 25;
};

SemanticOccupancyGrid build_road_grid(const RoadSceneSpec& spec, double t,
                                      const SemanticTaxonomy& taxonomy = SemanticTaxonomy::nuscenes_occupancy());
OccupancySequence build_road_sequence(const RoadSceneSpec& spec,
                                      const SemanticTaxonomy& taxonomy = SemanticTaxonomy::nuscenes_occupancy());

/// Smooth lane change from `start` to lateral position `target_y` over
/// [t_begin, t_end], sampled at rate_hz for `duration` seconds. Speed
/// follows `speed_at(t)` along x; yaw and speed magnitude follow the path.
Trajectory lane_change_trajectory(const EgoPose& start, double target_y, double t_begin, double t_end,
                                  double duration, const std::function<double(double)>& speed_at,
                                  double rate_hz = Trajectory::kDefaultRateHz);

/// Oncoming truck in the ego lane with three scripted responses: driving
/// straight into it, a late slow swerve, and a timely lane change.
struct OncomingTruckScene {
  OccupancySequence sequence;
  Trajectory collide;
  Trajectory partial;
  Trajectory evade;
};
OncomingTruckScene oncoming_truck_scene(double frame_rate_hz = 12.0);

// ---- scenario manifests -----------------------------------------------------

struct PassPolicy {
  bool require_no_collision = true;
  bool require_on_road = true;
};

struct Scenario {
  std::string id;
  EgoPose initial;
  OccupancySequence sequence;
  std::size_t horizon_frames = 1;
  TerminationPolicy termination;
  PassPolicy pass;
  RolloutPlan plan;
  std::uint64_t seed = 0;
  RewardEngine engine;
  PlannerConfig planner;
  std::optional<CameraRig> rig;
  std::optional<Trajectory> recorded;
};

/// Manifest JSON keys: id, initial_pose {t,x,y,yaw,speed,reverse},
/// occupancy_sequence (directory, relative to the manifest), horizon_frames,
/// termination {on_collision, on_off_drivable}, pass {require_no_collision,
/// require_on_road}, plan {mode, context, horizon}, seeds {noise, planner},
/// reward, footprint, planner, rig (file or inline), recorded_trajectory.
Scenario load_scenario(const std::filesystem::path& manifest);
/// Writes `<dir>/<id>.json` and its sequence directory `<dir>/<id>_seq`.
std::filesystem::path save_scenario(const Scenario& scenario, const std::filesystem::path& dir);

struct ScenarioOutcome {
  EpisodeLog episode;
  ScenarioResult result;
};

/// Runs one closed-loop episode with a playback generator. `seed`
/// overrides the manifest seeds when given.
ScenarioOutcome run_scenario(const Scenario& scenario, const std::string& planner,
                             std::optional<std::uint64_t> seed = std::nullopt);

/// Ten straight-road scenarios: clear roads, static obstacles in the ego
/// lane, a slow lead vehicle, and oncoming trucks.
std::vector<Scenario> default_suite();

/// Manifests found in `dir` (`*.json` excluding sequence manifests), sorted.
std::vector<std::filesystem::path> scenario_manifests(const std::filesystem::path& dir);

}  // namespace occunav
