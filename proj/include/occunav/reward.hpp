#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "occunav/geometry.hpp"
#include "occunav/occupancy.hpp"

namespace occunav {

/// Coefficients of the occupancy-grounded reward
///   total = 1 + (r_col + r_bd + r_vel) / n_reward.
struct RewardParams {
  double alpha_col = 1.0;
  double alpha_bd = 0.5;
  double alpha_vel = 0.2;
  double v_target = 8.0;
  double v_min = 2.0;
  double v_max = 15.0;
  double n_reward = 3.0;

  void validate() const;
};

/// Ego vehicle box. The collision box spans [z_offset, z_offset + height]
/// above the road; drivability is sampled at `road_sample_z`.
struct EgoFootprint {
  double length = 4.6;
  double width = 1.9;
  double height = 1.7;
  double z_offset = 0.1;
  double road_sample_z = -0.1;

  void validate() const;
  OrientedBox collision_box(const EgoPose& pose) const;
  /// Ground-projected corners and centre (5 points) at road_sample_z.
  std::vector<Vector3d> ground_samples(const EgoPose& pose) const;
};

struct RewardBreakdown {
  double t = 0;
  double r_col = 0, r_bd = 0, r_vel = 0;
  double total = 1;
  bool collided = false;
  bool off_drivable = false;
  bool out_of_band = false;
  bool reverse = false;

  bool operator==(const RewardBreakdown&) const = default;
};

/// -alpha_col * |speed| when any obstacle voxel lies inside the box, else 0.
double collision_reward(const SemanticOccupancyGrid& grid, const OrientedBox& footprint_box,
                        double speed, const RewardParams& params, bool* collided = nullptr);

/// -alpha_bd when any footprint ground sample is not drivable, else 0.
double boundary_reward(const SemanticOccupancyGrid& grid, const EgoFootprint& footprint,
                       const EgoPose& pose, const RewardParams& params,
                       bool* off_drivable = nullptr);

/// -alpha_vel * tanh(|speed - v_target|) outside [v_min, v_max], else 0.
double velocity_reward(double speed, const RewardParams& params, bool* out_of_band = nullptr);

RewardBreakdown waypoint_reward(const SemanticOccupancyGrid& grid, const EgoPose& pose,
                                const EgoFootprint& footprint, const RewardParams& params);

struct TrajectoryRewards {
  std::vector<RewardBreakdown> waypoints;
  double average = 0;
};

enum class TimeMatch {
  kStrict,  // waypoints outside the sequence's time range are an error
  kClamp,   // use the first/last grid outside the range
};

/// Scores every waypoint against the grid with the nearest timestamp.
TrajectoryRewards trajectory_rewards(const OccupancySequence& seq, const Trajectory& traj,
                                     const EgoFootprint& footprint, const RewardParams& params,
                                     TimeMatch match = TimeMatch::kStrict);

/// Parameters and footprint bundled for callers that score repeatedly.
struct RewardEngine {
  RewardParams params;
  EgoFootprint footprint;

  RewardBreakdown score(const SemanticOccupancyGrid& grid, const EgoPose& pose) const {
    return waypoint_reward(grid, pose, footprint, params);
  }
  TrajectoryRewards score(const OccupancySequence& seq, const Trajectory& traj,
                          TimeMatch match = TimeMatch::kStrict) const {
    return trajectory_rewards(seq, traj, footprint, params, match);
  }
};

/// Reward settings read from a JSON object; missing keys keep defaults.
RewardParams reward_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RewardParams& p);
EgoFootprint footprint_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EgoFootprint& f);
nlohmann::json to_json(const RewardBreakdown& b);

/// CSV `t,r_col,r_bd,r_vel,total`, one line per waypoint.
std::string rewards_to_csv(const TrajectoryRewards& rewards);

}  // namespace occunav
