#include "occunav/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "occunav/io.hpp"
#include "occunav/metrics.hpp"
#include "occunav/occupancy.hpp"
#include "occunav/raymap.hpp"
#include "occunav/reward.hpp"
#include "occunav/scenario.hpp"

namespace occunav {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("no such file or directory: " + p.string());
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// ---- raymap -------------------------------------------------------------------

struct RaymapArgs {
  std::string rig, traj, out, inspect;
  int height = 0, width = 0, spatial = 1, temporal = 1;
  std::optional<std::size_t> reference;
  bool literal_rotation = false;
};

int run_raymap(const RaymapArgs& a, std::ostream& out) {
  if (!a.inspect.empty()) {
    require_file(a.inspect);
    const RayMapf rm = read_raymap(a.inspect);
    out << "frames=" << rm.n_frames() << " views=" << rm.n_views() << " height=" << rm.height()
        << " width=" << rm.width() << " max_orthogonality_error=" << fmt(max_orthogonality_error(rm.cast<double>()))
        << '\n';
    return 0;
  }
  if (a.rig.empty() || a.traj.empty() || a.out.empty() || a.height <= 0 || a.width <= 0)
    throw CLI::ValidationError("raymap: --rig, --traj, --height, --width and --out are required");
  require_file(a.rig);
  require_file(a.traj);
  const CameraRig rig = load_rig(a.rig);
  const Trajectory traj = read_trajectory(a.traj);
  NormalizationConfig cfg;
  cfg.reference_index = a.reference;
  cfg.literal_rotation = a.literal_rotation;
  RayMap rm = normalized_raymap(rig, traj, a.height, a.width, cfg);
  if (a.spatial > 1 || a.temporal > 1) rm = downsample(rm, a.spatial, a.temporal);
  write_raymap(rm, a.out);
  out << "wrote " << a.out << " (" << rm.n_frames() << "x" << rm.n_views() << "x" << rm.height() << "x"
      << rm.width() << ")\n";
  return 0;
}

// ---- fuse ---------------------------------------------------------------------

struct FuseArgs {
  std::string rig, views, render_from, like, out, views_out;
  int height = 48, width = 64;
  double x = 0, y = 0, yaw = 0;
};

int run_fuse(const FuseArgs& a, std::ostream& out) {
  if (a.views.empty() == a.render_from.empty())
    throw CLI::ValidationError("fuse: give exactly one of --views and --render-from");
  const CameraRig rig = a.rig.empty() ? default_surround_rig() : (require_file(a.rig), load_rig(a.rig));
  const EgoPose ego{0.0, a.x, a.y, a.yaw, 0.0, false};

  std::optional<SemanticOccupancyGrid> source;
  GridGeometry geometry = GridGeometry::nuscenes_occupancy();
  SemanticTaxonomy taxonomy = SemanticTaxonomy::nuscenes_occupancy();
  const std::string& template_grid = a.render_from.empty() ? a.like : a.render_from;
  if (!template_grid.empty()) {
    require_file(template_grid);
    source = read_grid(template_grid);
    geometry = source->geometry();
    taxonomy = source->taxonomy();
  }

  std::vector<ViewImages> views;
  std::vector<std::uint8_t> visible;
  if (!a.views.empty()) {
    require_file(a.views);
    views = read_panorama(a.views);
  } else {
    RenderOptions opts;
    opts.hit_voxels = &visible;
    views = render_views(*source, rig, ego, a.height, a.width, opts);
    if (!a.views_out.empty()) write_panorama(views, a.views_out);
  }
  const SemanticOccupancyGrid fused = fuse_from_panorama(rig, ego, views, geometry, taxonomy);
  if (!a.out.empty()) write_grid(fused, a.out);
  out << "occupied=" << fused.occupied_count();
  if (!a.render_from.empty()) {
    const auto scores = iou_miou(fused, *source, visible);
    out << " visible_iou=" << fmt(scores.iou) << " visible_miou=" << fmt(scores.miou);
  }
  out << '\n';
  return 0;
}

// ---- reward -------------------------------------------------------------------

struct RewardArgs {
  std::string grid_seq, traj, params;
  bool clamp = false;
};

int run_reward(const RewardArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.grid_seq);
  require_file(a.traj);
  RewardEngine engine;
  if (!a.params.empty()) {
    require_file(a.params);
    const auto j = load_json(a.params);
    engine.params = reward_params_from_json(j);
    if (j.contains("footprint")) engine.footprint = footprint_from_json(j["footprint"]);
  }
  const OccupancySequence seq = read_sequence(a.grid_seq);
  const Trajectory traj = read_trajectory(a.traj);
  TrajectoryRewards r;
  try {
    r = engine.score(seq, traj, a.clamp ? TimeMatch::kClamp : TimeMatch::kStrict);
  } catch (const std::logic_error& e) {
    throw DataError(e.what());
  }
  out << rewards_to_csv(r);
  std::size_t collisions = 0, off_road = 0;
  for (const auto& b : r.waypoints) {
    collisions += b.collided;
    off_road += b.off_drivable;
  }
  err << "waypoints=" << r.waypoints.size() << " average_total=" << fmt(r.average) << " collisions=" << collisions
      << " off_drivable=" << off_road << '\n';
  return 0;
}

// ---- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string scenario, planner = "arc-greedy", out, report, histogram;
  std::optional<std::uint64_t> seed;
  std::size_t bins = 10;
  bool record_latency = false;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  require_file(a.scenario);
  const bool batch = fs::is_directory(a.scenario);
  const auto manifests = batch ? scenario_manifests(a.scenario) : std::vector<fs::path>{a.scenario};
  if (manifests.empty()) throw DataError("no scenario manifests in " + a.scenario);
  if (batch && !a.out.empty()) fs::create_directories(a.out);

  std::vector<ScenarioResult> results;
  for (const auto& m : manifests) {
    const Scenario s = load_scenario(m);
    const ScenarioOutcome o = run_scenario(s, a.planner, a.seed);
    const std::string log = to_json(o.episode, a.record_latency).dump(2) + "\n";
    if (!a.out.empty()) write_text(batch ? fs::path(a.out) / (s.id + ".json") : fs::path(a.out), log);
    out << s.id << ' ' << (o.result.passed ? "pass" : "fail") << " termination=" << o.result.termination
        << " average_reward=" << fmt(o.result.average_reward) << '\n';
    results.push_back(o.result);
  }
  const auto report = batch_report(results);
  out << "spr=" << fmt(report["summary"]["spr"].get<double>())
      << " mean_reward=" << fmt(report["summary"]["mean_reward"].get<double>()) << '\n';
  if (!a.report.empty()) write_text(a.report, report.dump(2) + "\n");
  if (!a.histogram.empty()) write_text(a.histogram, histogram_to_csv(reward_histogram(results, a.bins)));
  return 0;
}

// ---- metrics ------------------------------------------------------------------

struct MetricsArgs {
  std::string est, gt, report, histogram;
  std::size_t bins = 10;
  bool no_align = false;
};

int run_sim3(const MetricsArgs& a, std::ostream& out) {
  require_file(a.est);
  require_file(a.gt);
  const auto est = read_pose_sequence(a.est);
  const auto gt = read_pose_sequence(a.gt);
  if (est.size() != gt.size())
    throw DataError("pose sequences differ in length (" + std::to_string(est.size()) + " vs " +
                    std::to_string(gt.size()) + ")");
  Sim3 s;
  PoseErrors e;
  try {
    if (!a.no_align) s = sim3_align(est, gt);
    e = pose_errors(est, gt, s);
  } catch (const std::invalid_argument& ex) {
    throw DataError(ex.what());
  }
  out << "scale,rot_err,trans_err,residual\n"
      << fmt(s.scale) << ',' << fmt(e.rot_err) << ',' << fmt(e.trans_err) << ',' << fmt(e.residual_rms) << '\n';
  return 0;
}

int run_spr(const MetricsArgs& a, std::ostream& out) {
  require_file(a.report);
  const auto j = load_json(a.report);
  const auto& arr = j.is_object() ? j.at("results") : j;
  if (!arr.is_array() || arr.empty()) throw DataError(a.report + ": expected a non-empty results array");
  std::vector<ScenarioResult> results;
  for (const auto& r : arr) results.push_back(scenario_result_from_json(r));
  const auto report = batch_report(results);
  out << "spr=" << fmt(report["summary"]["spr"].get<double>())
      << " mean_reward=" << fmt(report["summary"]["mean_reward"].get<double>()) << '\n';
  if (!a.histogram.empty()) write_text(a.histogram, histogram_to_csv(reward_histogram(results, a.bins)));
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"occunav: panoramic ray-maps, semantic occupancy, rewards and closed-loop evaluation", "occunav"};
  app.require_subcommand(1);

  RaymapArgs ra;
  auto* raymap = app.add_subcommand("raymap", "Normalized Plücker ray-map of a rig along a trajectory");
  raymap->add_option("--rig", ra.rig, "Rig JSON");
  raymap->add_option("--traj", ra.traj, "Ego trajectory (CSV or JSON lines)");
  raymap->add_option("--height", ra.height, "Ray-map height");
  raymap->add_option("--width", ra.width, "Ray-map width");
  raymap->add_option("--spatial", ra.spatial, "Spatial downsampling factor")->check(CLI::PositiveNumber);
  raymap->add_option("--temporal", ra.temporal, "Temporal stride")->check(CLI::PositiveNumber);
  raymap->add_option("--reference", ra.reference, "Reference view index (default: rig reference)");
  raymap->add_flag("--literal-rotation", ra.literal_rotation, "Use the R0 Rk^T rotation form (not pose invariant)");
  raymap->add_option("--out", ra.out, "Output ONWM-RM1 file");
  raymap->add_option("--inspect", ra.inspect, "Print the header and orthogonality error of a ray-map file");

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Fuse panoramic depth/semantics into an occupancy grid");
  fuse->add_option("--rig", fa.rig, "Rig JSON (default surround rig when omitted)");
  fuse->add_option("--views", fa.views, "ONWM-PV1 panorama bundle");
  fuse->add_option("--render-from", fa.render_from, "Render views from this grid, then fuse them back");
  fuse->add_option("--like", fa.like, "Grid whose geometry and taxonomy the output uses");
  fuse->add_option("--height", fa.height, "Render height")->check(CLI::PositiveNumber);
  fuse->add_option("--width", fa.width, "Render width")->check(CLI::PositiveNumber);
  fuse->add_option("--x", fa.x, "Ego x");
  fuse->add_option("--y", fa.y, "Ego y");
  fuse->add_option("--yaw", fa.yaw, "Ego yaw (rad)");
  fuse->add_option("--views-out", fa.views_out, "Also write the rendered views");
  fuse->add_option("--out", fa.out, "Output ONWM-OG1 grid");

  RewardArgs wa;
  auto* reward = app.add_subcommand("reward", "Per-waypoint rewards of a trajectory over an occupancy sequence");
  reward->add_option("--grid-seq", wa.grid_seq, "Occupancy sequence directory")->required();
  reward->add_option("--traj", wa.traj, "Trajectory file")->required();
  reward->add_option("--params", wa.params, "JSON file with reward parameters (optionally under \"reward\")");
  reward->add_flag("--clamp", wa.clamp, "Score waypoints outside the sequence against its end frames");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Closed-loop episode(s) over scenario manifests");
  simulate->add_option("--scenario", sa.scenario, "Scenario manifest or directory of manifests")->required();
  simulate->add_option("--planner", sa.planner, "arc-greedy, straight, static or replay");
  simulate->add_option("--out", sa.out, "Episode log (directory for batches)");
  simulate->add_option("--seed", sa.seed, "Override manifest seeds");
  simulate->add_option("--report", sa.report, "Batch report JSON");
  simulate->add_option("--histogram", sa.histogram, "Average-reward histogram CSV");
  simulate->add_option("--bins", sa.bins, "Histogram bins")->check(CLI::PositiveNumber);
  simulate->add_flag("--record-latency", sa.record_latency, "Include wall-clock step latencies in logs");

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Trajectory and scenario metrics");
  metrics->require_subcommand(1);
  auto* sim3 = metrics->add_subcommand("sim3", "Sim(3)-aligned rotation and translation errors");
  sim3->add_option("--est", ma.est, "Estimated poses")->required();
  sim3->add_option("--gt", ma.gt, "Ground-truth poses")->required();
  sim3->add_flag("--no-align", ma.no_align, "Skip the similarity alignment");
  auto* spr = metrics->add_subcommand("spr", "Scenario pass rate of a batch report");
  spr->add_option("--report", ma.report, "Batch report JSON")->required();
  spr->add_option("--histogram", ma.histogram, "Average-reward histogram CSV");
  spr->add_option("--bins", ma.bins, "Histogram bins")->check(CLI::PositiveNumber);

  std::string suite_dir;
  auto* suite = app.add_subcommand("suite", "Write the built-in scenario suite");
  suite->add_option("--out", suite_dir, "Output directory")->required();

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand("version")) {
      out << "occunav " << kVersion << '\n';
      return 0;
    }
    if (raymap->parsed()) return run_raymap(ra, out);
    if (fuse->parsed()) return run_fuse(fa, out);
    if (reward->parsed()) return run_reward(wa, out, err);
    if (simulate->parsed()) return run_simulate(sa, out);
    if (sim3->parsed()) return run_sim3(ma, out);
    if (spr->parsed()) return run_spr(ma, out);
    if (suite->parsed()) {
      for (const auto& s : default_suite()) out << save_scenario(s, suite_dir).string() << '\n';
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n' << app.help();
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace occunav
