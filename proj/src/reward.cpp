#include "occunav/reward.hpp"

#include <cmath>
#include <sstream>

#include "occunav/io.hpp"

namespace occunav {

void RewardParams::validate() const {
  if (alpha_col < 0 || alpha_bd < 0 || alpha_vel < 0)
    throw std::invalid_argument("reward params: coefficients must be non-negative");
  if (!(v_min <= v_target && v_target <= v_max))
    throw std::invalid_argument("reward params: require v_min <= v_target <= v_max");
  if (!(n_reward >= 1)) throw std::invalid_argument("reward params: n_reward must be >= 1");
}

void EgoFootprint::validate() const {
  if (!(length > 0 && width > 0 && height > 0))
    throw std::invalid_argument("footprint: extents must be positive");
}

OrientedBox EgoFootprint::collision_box(const EgoPose& pose) const {
  return OrientedBox::upright(Vector3d(pose.x, pose.y, z_offset + 0.5 * height), pose.yaw,
                              Vector3d(length, width, height));
}

std::vector<Vector3d> EgoFootprint::ground_samples(const EgoPose& pose) const {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double hl = 0.5 * length, hw = 0.5 * width;
  std::vector<Vector3d> pts;
  pts.emplace_back(pose.x, pose.y, road_sample_z);
  for (double a : {hl, -hl})
    for (double b : {hw, -hw}) pts.emplace_back(pose.x + c * a - s * b, pose.y + s * a + c * b, road_sample_z);
  return pts;
}

double collision_reward(const SemanticOccupancyGrid& grid, const OrientedBox& box, double speed,
                        const RewardParams& params, bool* collided) {
  const auto obstacles = grid.taxonomy().obstacle_labels();
  const bool hit = query_box(grid, box, obstacles) > 0;
  if (collided) *collided = hit;
  return hit ? -params.alpha_col * std::abs(speed) : 0.0;
}

double boundary_reward(const SemanticOccupancyGrid& grid, const EgoFootprint& footprint,
                       const EgoPose& pose, const RewardParams& params, bool* off_drivable) {
  bool off = false;
  for (const auto& p : footprint.ground_samples(pose))
    off = off || grid.label_at(p) != grid.taxonomy().drivable();
  if (off_drivable) *off_drivable = off;
  return off ? -params.alpha_bd : 0.0;
}

double velocity_reward(double speed, const RewardParams& params, bool* out_of_band) {
  const double v = std::abs(speed);
  const bool out = v < params.v_min || v > params.v_max;
  if (out_of_band) *out_of_band = out;
  return out ? -params.alpha_vel * std::tanh(std::abs(v - params.v_target)) : 0.0;
}

RewardBreakdown waypoint_reward(const SemanticOccupancyGrid& grid, const EgoPose& pose,
                                const EgoFootprint& footprint, const RewardParams& params) {
  RewardBreakdown b;
  b.t = pose.t;
  b.reverse = pose.reverse;
  b.r_col = collision_reward(grid, footprint.collision_box(pose), pose.speed, params, &b.collided);
  b.r_bd = boundary_reward(grid, footprint, pose, params, &b.off_drivable);
  b.r_vel = velocity_reward(pose.speed, params, &b.out_of_band);
  b.total = 1.0 + (b.r_col + b.r_bd + b.r_vel) / params.n_reward;
  return b;
}

TrajectoryRewards trajectory_rewards(const OccupancySequence& seq, const Trajectory& traj,
                                     const EgoFootprint& footprint, const RewardParams& params,
                                     TimeMatch match) {
  if (seq.empty()) throw std::invalid_argument("trajectory_rewards: empty occupancy sequence");
  constexpr double kTimeTol = 1e-9;
  TrajectoryRewards out;
  out.waypoints.reserve(traj.size());
  double sum = 0;
  for (const auto& pose : traj.poses()) {
    if (match == TimeMatch::kStrict &&
        (pose.t < seq.start() - kTimeTol || pose.t > seq.end() + kTimeTol))
      throw std::invalid_argument("trajectory_rewards: waypoint t=" + std::to_string(pose.t) +
                                  " outside occupancy sequence range");
    out.waypoints.push_back(waypoint_reward(seq.grid(seq.nearest(pose.t)), pose, footprint, params));
    sum += out.waypoints.back().total;
  }
  out.average = out.waypoints.empty() ? 0.0 : sum / double(out.waypoints.size());
  return out;
}

RewardParams reward_params_from_json(const nlohmann::json& j) {
  const auto& src = j.contains("reward") ? j.at("reward") : j;
  RewardParams p;
  try {
    p.alpha_col = src.value("alpha_col", p.alpha_col);
    p.alpha_bd = src.value("alpha_bd", p.alpha_bd);
    p.alpha_vel = src.value("alpha_vel", p.alpha_vel);
    p.v_target = src.value("v_target", p.v_target);
    p.v_min = src.value("v_min", p.v_min);
    p.v_max = src.value("v_max", p.v_max);
    p.n_reward = src.value("n_reward", p.n_reward);
    p.validate();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("reward params: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return p;
}

nlohmann::json to_json(const RewardParams& p) {
  return {{"alpha_col", p.alpha_col}, {"alpha_bd", p.alpha_bd}, {"alpha_vel", p.alpha_vel},
          {"v_target", p.v_target},   {"v_min", p.v_min},       {"v_max", p.v_max},
          {"n_reward", p.n_reward}};
}

EgoFootprint footprint_from_json(const nlohmann::json& j) {
  EgoFootprint f;
  try {
    f.length = j.value("length", f.length);
    f.width = j.value("width", f.width);
    f.height = j.value("height", f.height);
    f.z_offset = j.value("z_offset", f.z_offset);
    f.road_sample_z = j.value("road_sample_z", f.road_sample_z);
    f.validate();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("footprint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return f;
}

nlohmann::json to_json(const EgoFootprint& f) {
  return {{"length", f.length},     {"width", f.width},
          {"height", f.height},     {"z_offset", f.z_offset},
          {"road_sample_z", f.road_sample_z}};
}

nlohmann::json to_json(const RewardBreakdown& b) {
  return {{"t", b.t},
          {"r_col", b.r_col},
          {"r_bd", b.r_bd},
          {"r_vel", b.r_vel},
          {"total", b.total},
          {"collided", b.collided},
          {"off_drivable", b.off_drivable},
          {"out_of_band", b.out_of_band},
          {"reverse", b.reverse}};
}

std::string rewards_to_csv(const TrajectoryRewards& rewards) {
  std::ostringstream out;
  out.precision(17);
  out << "t,r_col,r_bd,r_vel,total\n";
  for (const auto& b : rewards.waypoints)
    out << b.t << ',' << b.r_col << ',' << b.r_bd << ',' << b.r_vel << ',' << b.total << '\n';
  return out.str();
}

}  // namespace occunav
