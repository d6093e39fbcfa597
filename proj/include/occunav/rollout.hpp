#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occunav/planner.hpp"
#include "occunav/raymap.hpp"
#include "occunav/reward.hpp"
#include "occunav/world.hpp"

namespace occunav {

// ---- flexible-forcing noise -------------------------------------------------

struct LevelDistribution {
  enum class Kind { kUniform, kConstant };
  Kind kind = Kind::kUniform;
  double lo = 0.0, hi = 1.0;  // uniform bounds
  double value = 0.0;         // constant level

  static LevelDistribution uniform(double lo = 0.0, double hi = 1.0) {
    return {Kind::kUniform, lo, hi, 0.0};
  }
  static LevelDistribution constant(double v) { return {Kind::kConstant, 0.0, 0.0, v}; }
};

/// Independent per-frame (alpha) and per-view (beta) noise levels in [0, 1].
struct NoiseSchedule {
  Eigen::VectorXd frame_levels;
  Eigen::VectorXd view_levels;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws all frame levels, then all view levels, from one seeded stream.
NoiseSchedule sample_noise_schedule(std::size_t n_frames, std::size_t n_views, std::uint64_t seed,
                                    const LevelDistribution& dist = LevelDistribution::uniform());

/// Numeric (frame, view) stack; column `frame * n_views + view` holds the
/// flattened cell.
struct FrameStack {
  std::size_t n_frames = 0, n_views = 0;
  Eigen::MatrixXd cells;

  FrameStack() = default;
  FrameStack(std::size_t frames, std::size_t views, Eigen::Index cell_size)
      : n_frames(frames), n_views(views), cells(Eigen::MatrixXd::Zero(cell_size, Eigen::Index(frames * views))) {}

  auto cell(std::size_t frame, std::size_t view) { return cells.col(Eigen::Index(frame * n_views + view)); }
  auto cell(std::size_t frame, std::size_t view) const {
    return cells.col(Eigen::Index(frame * n_views + view));
  }
};

/// x + alpha_i * eps_frame + beta_j * eps_view with fresh standard-normal
/// draws per element. Cells whose levels are both zero are copied unchanged
/// (their draws are still consumed, so streams do not depend on levels).
FrameStack corrupt(const FrameStack& states, const NoiseSchedule& schedule, std::mt19937_64& rng);

// ---- auto-regressive windows ------------------------------------------------

struct WindowPlan {
  std::vector<std::size_t> context;
  std::vector<std::size_t> outputs;
};

/// Frame-level: context [max(0, t-K+1) .. t], output t+1.
WindowPlan plan_frame_ar(std::size_t t, std::size_t context, std::size_t total);

/// Clip-level: the last min(M, t+1) frames as context, outputs
/// [t+1 .. min(t+L, total-1)].
WindowPlan plan_clip_ar(std::size_t t, std::size_t context, std::size_t horizon, std::size_t total);

struct RolloutPlan {
  enum class Mode { kFrame, kClip };
  Mode mode = Mode::kClip;
  std::size_t context = 1;  // K (frame) or M (clip)
  std::size_t horizon = 1;  // L, clip mode only
  std::size_t total_frames = 1;

  void validate() const;
  WindowPlan window(std::size_t t) const;
  /// Windows from t = 0, each advancing t to its last output.
  std::vector<WindowPlan> chain() const;
};

RolloutPlan rollout_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RolloutPlan& p);

// ---- world generators -------------------------------------------------------

struct GenerationRequest {
  std::vector<std::size_t> context_frames;
  std::vector<WorldStatePtr> context;
  /// Per-context-frame noise level for partially noised history.
  std::vector<double> context_noise;
  std::vector<std::size_t> output_frames;
  /// Ego poses at the output frame times (for view rendering).
  std::vector<EgoPose> output_poses;
  const RayMap* conditioning = nullptr;
};

class WorldGenerator {
 public:
  virtual ~WorldGenerator() = default;
  virtual std::size_t frame_count() const = 0;
  virtual double frame_time(std::size_t frame) const = 0;
  virtual WorldStatePtr initial_state(const EgoPose& ego) = 0;
  /// Must return exactly one state per requested output frame.
  virtual std::vector<WorldStatePtr> step(const GenerationRequest& request) = 0;
};

struct PlaybackOptions {
  /// Render per-view depth/semantics with this rig when set.
  std::optional<CameraRig> rig;
  int render_height = 0, render_width = 0;
  /// Perturb rendered depth with corrupt() when set.
  std::optional<LevelDistribution> depth_noise;
  std::uint64_t seed = 0;
};

/// Replays a stored occupancy sequence frame by frame.
class PlaybackGenerator final : public WorldGenerator {
 public:
  explicit PlaybackGenerator(OccupancySequence seq, PlaybackOptions options = {});

  std::size_t frame_count() const override { return seq_.size(); }
  double frame_time(std::size_t frame) const override { return seq_.timestamps().at(frame); }
  WorldStatePtr initial_state(const EgoPose& ego) override;
  std::vector<WorldStatePtr> step(const GenerationRequest& request) override;

 private:
  WorldStatePtr make_state(std::size_t frame, const EgoPose& ego);

  OccupancySequence seq_;
  PlaybackOptions options_;
  std::mt19937_64 rng_;
};

// ---- closed loop ------------------------------------------------------------

enum class Termination { kHorizon, kCollision, kOffDrivable };
std::string to_string(Termination t);

struct TerminationPolicy {
  bool on_collision = true;
  bool on_off_drivable = true;
};

struct ClosedLoopConfig {
  std::string scenario_id;
  EgoPose initial;
  std::size_t horizon_frames = 1;
  RolloutPlan plan;  // total_frames is set from horizon_frames
  TerminationPolicy termination;
  double rate_hz = Trajectory::kDefaultRateHz;
  /// Rig for ray-map conditioning; conditioning is skipped when unset.
  std::optional<CameraRig> rig;
  int raymap_height = 4, raymap_width = 8;
  double context_noise = 0.0;
};

struct StepLog {
  std::size_t frame = 0;
  std::vector<std::size_t> context;
  std::vector<std::size_t> outputs;
  std::vector<RewardBreakdown> rewards;
  double latency_ms = 0;
};

struct EpisodeLog {
  std::string scenario_id;
  std::string planner;
  Trajectory executed;
  std::vector<StepLog> steps;
  Termination termination = Termination::kHorizon;
  std::size_t frames_completed = 0;
  double average_reward = 0;

  std::vector<RewardBreakdown> rewards() const;
};

/// Plan -> condition -> generate -> score until the horizon or a terminal
/// event. The first step also scores the initial pose.
EpisodeLog run_closed_loop(WorldGenerator& generator, Planner& planner, const RewardEngine& engine,
                           const ClosedLoopConfig& cfg);

/// Episode as JSON. Latencies are wall-clock and only included on request,
/// which keeps logs byte-reproducible by default.
nlohmann::json to_json(const EpisodeLog& log, bool include_latency = false);

}  // namespace occunav
