#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occunav/geometry.hpp"
#include "occunav/reward.hpp"
#include "occunav/world.hpp"

namespace occunav {

struct PlannerConfig {
  std::size_t n_candidates = 1024;
  std::size_t horizon_steps = 24;
  double rate_hz = Trajectory::kDefaultRateHz;
  std::vector<double> speeds{8.0, 5.0};
  /// Curvatures are taken symmetrically: 0 and +/- each positive entry.
  std::vector<double> curvatures{0.02, 0.05, 0.1};
  std::vector<double> lateral_offsets{0.0, 3.5, -3.5};
  std::uint64_t seed = 0;

  void validate() const;
};

PlannerConfig planner_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PlannerConfig& c);

/// All waypoints at the start position with zero speed; stamps
/// start.t + k / rate_hz for k = 1..horizon_steps.
Trajectory static_trajectory(const EgoPose& start, std::size_t horizon_steps,
                             double rate_hz = Trajectory::kDefaultRateHz);

/// Point on a constant-curvature arc after travelling `s` metres.
EgoPose arc_point(const EgoPose& start, double curvature, double s);

struct Candidate {
  Trajectory trajectory;
  double speed = 0;
  double curvature = 0;
  double lateral_offset = 0;
};

/// Constant-curvature arcs over speeds x curvatures x lateral offsets,
/// stamped at start.t + k / rate_hz for k = 1..horizon_steps. A lateral
/// offset is blended in along the arc normal with a (1 - cos) ramp that
/// completes at the horizon. Arcs sweeping more than a full turn are
/// dropped. When the product exceeds n_candidates, a seeded subset is kept
/// in product order.
std::vector<Candidate> sample_candidates(const EgoPose& start, const PlannerConfig& cfg);

struct Selection {
  std::size_t index = 0;
  Trajectory trajectory;
  double average_reward = 0;
};

/// Candidate with the highest average reward; ties go to the smaller
/// |curvature|, then to the lower index.
Selection select_best(const std::vector<Candidate>& candidates, const OccupancySequence& seq,
                      const RewardEngine& engine, TimeMatch match = TimeMatch::kClamp);

struct PlanningContext {
  EgoPose ego;
  WorldStatePtr state;
  const RewardEngine* engine = nullptr;
  /// Seconds of trajectory the caller needs beyond ego.t.
  double min_duration = 0;
  double rate_hz = Trajectory::kDefaultRateHz;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  /// Waypoints strictly after ctx.ego.t at ctx.rate_hz.
  virtual Trajectory propose(const PlanningContext& ctx) = 0;
};

/// Samples arcs and keeps the best one against the current occupancy,
/// held static over the planning horizon.
class ArcGreedyPlanner final : public Planner {
 public:
  explicit ArcGreedyPlanner(PlannerConfig cfg = {});
  std::string name() const override { return "arc-greedy"; }
  Trajectory propose(const PlanningContext& ctx) override;

 private:
  PlannerConfig cfg_;
};

/// Constant velocity along the current heading.
class StraightPlanner final : public Planner {
 public:
  explicit StraightPlanner(double speed = -1) : speed_(speed) {}
  std::string name() const override { return "straight"; }
  Trajectory propose(const PlanningContext& ctx) override;

 private:
  double speed_;  // negative: keep the ego's current speed
};

/// Holds position.
class StaticPlanner final : public Planner {
 public:
  std::string name() const override { return "static"; }
  Trajectory propose(const PlanningContext& ctx) override;
};

/// Replays a recorded trajectory.
class ReplayPlanner final : public Planner {
 public:
  explicit ReplayPlanner(Trajectory recorded) : recorded_(std::move(recorded)) {}
  std::string name() const override { return "replay"; }
  Trajectory propose(const PlanningContext& ctx) override;

 private:
  Trajectory recorded_;
};

/// Planner by CLI name: `arc-greedy`, `straight`, `static`, `replay`.
std::unique_ptr<Planner> make_planner(const std::string& name, const PlannerConfig& cfg,
                                      const Trajectory* recorded = nullptr);

}  // namespace occunav
