#include "occunav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occunav/io.hpp"

namespace occunav {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- scenes -----------------------------------------------------------------

SemanticOccupancyGrid build_road_grid(const RoadSceneSpec& spec, double t, const SemanticTaxonomy& taxonomy) {
  SemanticOccupancyGrid grid(spec.geometry, taxonomy);
  const auto& g = spec.geometry;
  const Label drivable = taxonomy.drivable();
  const Label sidewalk = taxonomy.index_of("sidewalk");
  // Ground layer: the voxel row containing z = -voxel_size / 2.
  const auto ground = g.voxel_of(Vector3d(g.origin.x(), g.origin.y(), -0.5 * g.voxel_size));
  if (!ground) throw std::invalid_argument("road scene: grid does not contain the ground layer");
  const std::uint32_t iz = g.coords(*ground)[2];
  for (std::uint32_t ix = 0; ix < g.dims[0]; ++ix)
    for (std::uint32_t iy = 0; iy < g.dims[1]; ++iy) {
      const double y = g.center(ix, iy, iz).y();
      grid.set(ix, iy, iz, std::abs(y) <= spec.road_half_width ? drivable : sidewalk);
    }
  for (const auto& o : spec.obstacles) {
    const Eigen::Vector2d c = o.center + t * o.velocity;
    grid.fill(OrientedBox::upright(Vector3d(c.x(), c.y(), 0.5 * o.size.z()), o.yaw, o.size),
              taxonomy.index_of(o.label));
  }
  return grid;
}

OccupancySequence build_road_sequence(const RoadSceneSpec& spec, const SemanticTaxonomy& taxonomy) {
  std::vector<SemanticOccupancyGrid> grids;
  std::vector<double> stamps;
  for (std::size_t i = 0; i < spec.n_frames; ++i) {
    const double t = double(i) / spec.frame_rate_hz;
    grids.push_back(build_road_grid(spec, t, taxonomy));
    stamps.push_back(t);
  }
  return OccupancySequence(std::move(grids), std::move(stamps));
}

Trajectory lane_change_trajectory(const EgoPose& start, double target_y, double t_begin, double t_end,
                                  double duration, const std::function<double(double)>& speed_at,
                                  double rate_hz) {
  const double dy_total = target_y - start.y;
  auto ramp = [&](double t) {
    if (t <= t_begin) return 0.0;
    if (t >= t_end) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * (t - t_begin) / (t_end - t_begin)));
  };
  auto ramp_rate = [&](double t) {
    if (t <= t_begin || t >= t_end) return 0.0;
    const double w = std::numbers::pi / (t_end - t_begin);
    return 0.5 * w * std::sin(w * (t - t_begin));
  };
  std::vector<EgoPose> poses;
  const auto steps = std::size_t(std::llround(duration * rate_hz));
  constexpr int kSub = 32;
  double x = start.x;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = double(k) / rate_hz;
    if (k > 0) {
      // Trapezoidal integration of the longitudinal speed.
      const double h = 1.0 / (rate_hz * kSub);
      const double t0 = double(k - 1) / rate_hz;
      for (int i = 0; i < kSub; ++i)
        x += 0.5 * h * (speed_at(t0 + i * h) + speed_at(t0 + (i + 1) * h));
    }
    const double vx = speed_at(t), vy = dy_total * ramp_rate(t);
    EgoPose p;
    p.t = start.t + t;
    p.x = x;
    p.y = start.y + dy_total * ramp(t);
    p.yaw = (vx == 0 && vy == 0) ? start.yaw : std::atan2(vy, vx);
    p.speed = std::hypot(vx, vy);
    poses.push_back(p);
  }
  return Trajectory(std::move(poses), rate_hz);
}

OncomingTruckScene oncoming_truck_scene(double frame_rate_hz) {
  RoadSceneSpec spec;
  spec.frame_rate_hz = frame_rate_hz;
  spec.n_frames = std::size_t(std::llround(4.0 * frame_rate_hz)) + 1;
  spec.obstacles.push_back({"truck", {60.0, 0.0}, {8.0, 2.6, 3.0}, std::numbers::pi, {-8.0, 0.0}});

  OncomingTruckScene scene;
  scene.sequence = build_road_sequence(spec);
  const EgoPose start{0.0, 0.0, 0.0, 0.0, 10.0, false};
  scene.collide = lane_change_trajectory(start, 0.0, 0.0, 1.0, 4.0, [](double) { return 10.0; });
  scene.partial = lane_change_trajectory(start, 3.5, 0.5, 3.0, 4.0, [](double t) {
    // Brakes from 10 m/s to a crawl below the speed band while swerving.
    return t < 0.5 ? 10.0 : std::max(1.5, 10.0 - 8.5 * (t - 0.5) / 0.75);
  });
  scene.evade = lane_change_trajectory(start, 3.5, 0.0, 2.0, 4.0, [](double) { return 8.0; });
  return scene;
}

// ---- manifests ----------------------------------------------------------------

namespace {

EgoPose pose_from_json(const json& j) {
  return {j.value("t", 0.0), j.at("x").get<double>(), j.at("y").get<double>(), j.value("yaw", 0.0),
          j.value("speed", 0.0), j.value("reverse", false)};
}

json pose_to_json(const EgoPose& p) {
  return {{"t", p.t}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}, {"speed", p.speed}, {"reverse", p.reverse}};
}

}  // namespace

Scenario load_scenario(const fs::path& manifest) {
  const json j = load_json(manifest);
  const fs::path base = manifest.parent_path();
  Scenario s;
  try {
    s.id = j.value("id", manifest.stem().string());
    s.initial = pose_from_json(j.at("initial_pose"));
    s.sequence = read_sequence(base / j.at("occupancy_sequence").get<std::string>());
    s.horizon_frames = j.at("horizon_frames").get<std::size_t>();
    if (j.contains("termination")) {
      s.termination.on_collision = j["termination"].value("on_collision", true);
      s.termination.on_off_drivable = j["termination"].value("on_off_drivable", true);
    }
    if (j.contains("pass")) {
      s.pass.require_no_collision = j["pass"].value("require_no_collision", true);
      s.pass.require_on_road = j["pass"].value("require_on_road", true);
    }
    if (j.contains("plan")) s.plan = rollout_plan_from_json(j["plan"]);
    if (j.contains("seeds")) s.seed = j["seeds"].value("noise", std::uint64_t{0});
    if (j.contains("reward")) s.engine.params = reward_params_from_json(j["reward"]);
    if (j.contains("footprint")) s.engine.footprint = footprint_from_json(j["footprint"]);
    if (j.contains("planner")) s.planner = planner_config_from_json(j["planner"]);
    if (j.contains("seeds") && j["seeds"].contains("planner"))
      s.planner.seed = j["seeds"]["planner"].get<std::uint64_t>();
    if (j.contains("rig"))
      s.rig = j["rig"].is_string() ? load_rig(base / j["rig"].get<std::string>()) : rig_from_json(j["rig"]);
    if (j.contains("recorded_trajectory"))
      s.recorded = read_trajectory(base / j["recorded_trajectory"].get<std::string>());
  } catch (const json::exception& e) {
    throw DataError("scenario '" + manifest.string() + "': " + e.what());
  }
  if (s.horizon_frames < 1) throw DataError("scenario '" + manifest.string() + "': horizon_frames must be >= 1");
  return s;
}

fs::path save_scenario(const Scenario& s, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string seq_dir = s.id + "_seq";
  write_sequence(s.sequence, dir / seq_dir);
  json j{{"id", s.id},
         {"initial_pose", pose_to_json(s.initial)},
         {"occupancy_sequence", seq_dir},
         {"horizon_frames", s.horizon_frames},
         {"termination", {{"on_collision", s.termination.on_collision},
                          {"on_off_drivable", s.termination.on_off_drivable}}},
         {"pass", {{"require_no_collision", s.pass.require_no_collision},
                   {"require_on_road", s.pass.require_on_road}}},
         {"plan", to_json(s.plan)},
         {"seeds", {{"noise", s.seed}, {"planner", s.planner.seed}}},
         {"reward", to_json(s.engine.params)},
         {"footprint", to_json(s.engine.footprint)},
         {"planner", to_json(s.planner)}};
  if (s.rig) j["rig"] = rig_to_json(*s.rig);
  if (s.recorded) {
    const std::string traj = s.id + "_recorded.csv";
    write_trajectory(*s.recorded, dir / traj);
    j["recorded_trajectory"] = traj;
  }
  const fs::path path = dir / (s.id + ".json");
  write_text(path, j.dump(2) + "\n");
  return path;
}

ScenarioOutcome run_scenario(const Scenario& s, const std::string& planner_name,
                             std::optional<std::uint64_t> seed) {
  PlaybackOptions playback;
  playback.seed = seed.value_or(s.seed);
  PlaybackGenerator generator(s.sequence, playback);

  PlannerConfig pcfg = s.planner;
  if (seed) pcfg.seed = *seed;
  const auto planner = make_planner(planner_name, pcfg, s.recorded ? &*s.recorded : nullptr);

  ClosedLoopConfig cfg;
  cfg.scenario_id = s.id;
  cfg.initial = s.initial;
  cfg.horizon_frames = s.horizon_frames;
  cfg.plan = s.plan;
  cfg.termination = s.termination;
  cfg.rig = s.rig;

  ScenarioOutcome out;
  out.episode = run_closed_loop(generator, *planner, s.engine, cfg);
  bool collided = false, off_road = false;
  for (const auto& b : out.episode.rewards()) {
    collided = collided || b.collided;
    off_road = off_road || b.off_drivable;
  }
  auto& r = out.result;
  r.id = s.id;
  r.average_reward = out.episode.average_reward;
  r.termination = to_string(out.episode.termination);
  r.episode_length = out.episode.frames_completed;
  r.passed = out.episode.termination == Termination::kHorizon &&
             !(s.pass.require_no_collision && collided) && !(s.pass.require_on_road && off_road);
  return out;
}

std::vector<Scenario> default_suite() {
  const double pi = std::numbers::pi;
  struct Entry {
    const char* id;
    std::vector<ObstacleSpec> obstacles;
    RolloutPlan::Mode mode;
  };
  const std::vector<Entry> entries{
      {"s01_clear_road", {}, RolloutPlan::Mode::kClip},
      {"s02_parked_car", {{"car", {30.0, 0.0}, {4.5, 1.9, 1.6}, 0.0, {0.0, 0.0}}}, RolloutPlan::Mode::kFrame},
      {"s03_barrier", {{"barrier", {25.0, 0.3}, {0.6, 3.0, 1.2}, 0.0, {0.0, 0.0}}}, RolloutPlan::Mode::kClip},
      {"s04_oncoming_truck", {{"truck", {75.0, 0.0}, {8.0, 2.6, 3.0}, pi, {-6.0, 0.0}}}, RolloutPlan::Mode::kFrame},
      {"s05_staggered_cars",
       {{"car", {25.0, 0.0}, {4.5, 1.9, 1.6}, 0.0, {0.0, 0.0}}, {"car", {55.0, 3.5}, {4.5, 1.9, 1.6}, 0.0, {0.0, 0.0}}},
       RolloutPlan::Mode::kClip},
      {"s06_slow_lead_car", {{"car", {18.0, 0.0}, {4.5, 1.9, 1.6}, 0.0, {3.0, 0.0}}}, RolloutPlan::Mode::kFrame},
      {"s07_side_barrier", {{"barrier", {30.0, -4.5}, {6.0, 0.6, 1.2}, 0.0, {0.0, 0.0}}}, RolloutPlan::Mode::kClip},
      {"s08_truck_and_parked_car",
       {{"truck", {80.0, 0.0}, {8.0, 2.6, 3.0}, pi, {-5.0, 0.0}}, {"car", {22.0, -3.5}, {4.5, 1.9, 1.6}, 0.0, {0.0, 0.0}}},
       RolloutPlan::Mode::kClip},
      {"s09_cone_taper",
       {{"traffic cone", {28.0, -0.8}, {0.5, 0.5, 0.8}, 0.0, {0.0, 0.0}},
        {"traffic cone", {30.0, 0.0}, {0.5, 0.5, 0.8}, 0.0, {0.0, 0.0}},
        {"traffic cone", {32.0, 0.8}, {0.5, 0.5, 0.8}, 0.0, {0.0, 0.0}}},
       RolloutPlan::Mode::kFrame},
      {"s10_pedestrian_in_lane", {{"pedestrian", {35.0, 0.2}, {0.6, 0.6, 1.8}, 0.0, {0.0, 0.0}}}, RolloutPlan::Mode::kClip},
  };

  std::vector<Scenario> suite;
  for (const auto& e : entries) {
    RoadSceneSpec spec;
    spec.obstacles = e.obstacles;
    spec.n_frames = 25;
    Scenario s;
    s.id = e.id;
    s.initial = {0.0, 0.0, 0.0, 0.0, 8.0, false};
    s.sequence = build_road_sequence(spec);
    s.horizon_frames = 24;
    s.plan.mode = e.mode;
    s.plan.context = e.mode == RolloutPlan::Mode::kFrame ? 2 : 1;
    s.plan.horizon = 2;
    s.seed = 7;
    s.rig = default_surround_rig(16, 12);
    suite.push_back(std::move(s));
  }
  return suite;
}

std::vector<fs::path> scenario_manifests(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("scenario directory '" + dir.string() + "' not found");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace occunav
