#include "occunav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "occunav/io.hpp"
#include "occunav/parallel.hpp"

namespace occunav {

void PlannerConfig::validate() const {
  if (n_candidates < 1) throw std::invalid_argument("planner: n_candidates must be >= 1");
  if (horizon_steps < 1) throw std::invalid_argument("planner: horizon_steps must be >= 1");
  if (!(rate_hz > 0)) throw std::invalid_argument("planner: rate_hz must be positive");
  if (speeds.empty()) throw std::invalid_argument("planner: speed set is empty");
  for (double v : speeds)
    if (v < 0) throw std::invalid_argument("planner: speeds must be non-negative");
  for (double k : curvatures)
    if (k < 0) throw std::invalid_argument("planner: list curvature magnitudes (>= 0)");
}

PlannerConfig planner_config_from_json(const nlohmann::json& j) {
  PlannerConfig c;
  try {
    c.n_candidates = j.value("n_candidates", c.n_candidates);
    c.horizon_steps = j.value("horizon_steps", c.horizon_steps);
    c.rate_hz = j.value("rate_hz", c.rate_hz);
    c.speeds = j.value("speeds", c.speeds);
    c.curvatures = j.value("curvatures", c.curvatures);
    c.lateral_offsets = j.value("lateral_offsets", c.lateral_offsets);
    c.seed = j.value("seed", c.seed);
    c.validate();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("planner config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return c;
}

nlohmann::json to_json(const PlannerConfig& c) {
  return {{"n_candidates", c.n_candidates}, {"horizon_steps", c.horizon_steps},
          {"rate_hz", c.rate_hz},           {"speeds", c.speeds},
          {"curvatures", c.curvatures},     {"lateral_offsets", c.lateral_offsets},
          {"seed", c.seed}};
}

Trajectory static_trajectory(const EgoPose& start, std::size_t horizon_steps, double rate_hz) {
  if (horizon_steps < 1) throw std::invalid_argument("static_trajectory: horizon must be >= 1");
  std::vector<EgoPose> poses;
  for (std::size_t k = 1; k <= horizon_steps; ++k) {
    EgoPose p = start;
    p.t = start.t + double(k) / rate_hz;
    p.speed = 0;
    p.reverse = false;
    poses.push_back(p);
  }
  return Trajectory(std::move(poses), rate_hz);
}

EgoPose arc_point(const EgoPose& start, double curvature, double s) {
  EgoPose p = start;
  const double heading = start.yaw + curvature * s;
  if (std::abs(curvature) < 1e-12) {
    p.x = start.x + s * std::cos(start.yaw);
    p.y = start.y + s * std::sin(start.yaw);
  } else {
    p.x = start.x + (std::sin(heading) - std::sin(start.yaw)) / curvature;
    p.y = start.y - (std::cos(heading) - std::cos(start.yaw)) / curvature;
  }
  p.yaw = wrap_angle(heading);
  return p;
}

namespace {

Trajectory arc_trajectory(const EgoPose& start, double speed, double curvature, double offset,
                          std::size_t steps, double rate_hz) {
  const double duration = double(steps) / rate_hz;
  std::vector<EgoPose> poses;
  poses.reserve(steps);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double tau = double(k) / rate_hz;
    EgoPose p = arc_point(start, curvature, speed * tau);
    const double heading = start.yaw + curvature * speed * tau;
    const Eigen::Vector2d tangent(std::cos(heading), std::sin(heading));
    const Eigen::Vector2d normal(-tangent.y(), tangent.x());
    // Offset ramp b(tau) = (1 - cos(pi tau / T)) / 2 along the left normal.
    const double phase = std::numbers::pi * tau / duration;
    const double b = 0.5 * (1.0 - std::cos(phase));
    const double db = 0.5 * std::numbers::pi / duration * std::sin(phase);
    p.x += offset * b * normal.x();
    p.y += offset * b * normal.y();
    const Eigen::Vector2d vel = (speed - offset * b * curvature * speed) * tangent + offset * db * normal;
    if (offset != 0.0 && vel.norm() > 1e-12) {
      p.yaw = std::atan2(vel.y(), vel.x());
      p.speed = vel.norm();
    } else {
      p.speed = speed;
    }
    p.t = start.t + tau;
    p.reverse = false;
    poses.push_back(p);
  }
  return Trajectory(std::move(poses), rate_hz);
}

}  // namespace

std::vector<Candidate> sample_candidates(const EgoPose& start, const PlannerConfig& cfg) {
  cfg.validate();
  std::vector<double> kappas{0.0};
  for (double k : cfg.curvatures)
    if (k > 0) {
      kappas.push_back(k);
      kappas.push_back(-k);
    }
  const double duration = double(cfg.horizon_steps) / cfg.rate_hz;

  struct Spec {
    double v, k, o;
  };
  std::vector<Spec> specs;
  for (double v : cfg.speeds)
    for (double k : kappas) {
      if (std::abs(v * duration * k) > 2.0 * std::numbers::pi) continue;  // full-circle guard
      for (double o : cfg.lateral_offsets) specs.push_back({v, k, o});
    }
  if (specs.size() > cfg.n_candidates) {
    std::vector<std::size_t> idx(specs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(cfg.n_candidates);
    std::sort(idx.begin(), idx.end());
    std::vector<Spec> kept;
    for (auto i : idx) kept.push_back(specs[i]);
    specs = std::move(kept);
  }
  std::vector<Candidate> out;
  out.reserve(specs.size());
  for (const auto& s : specs)
    out.push_back({arc_trajectory(start, s.v, s.k, s.o, cfg.horizon_steps, cfg.rate_hz), s.v, s.k, s.o});
  return out;
}

Selection select_best(const std::vector<Candidate>& candidates, const OccupancySequence& seq,
                      const RewardEngine& engine, TimeMatch match) {
  if (candidates.empty()) throw std::invalid_argument("select_best: no candidates");
  std::vector<double> scores(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    scores[i] = engine.score(seq, candidates[i].trajectory, match).average;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] &&
         std::abs(candidates[i].curvature) < std::abs(candidates[best].curvature)))
      best = i;
  }
  return {best, candidates[best].trajectory, scores[best]};
}

ArcGreedyPlanner::ArcGreedyPlanner(PlannerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Trajectory ArcGreedyPlanner::propose(const PlanningContext& ctx) {
  if (!ctx.state || !ctx.engine) throw std::invalid_argument("arc-greedy: missing state or reward engine");
  PlannerConfig cfg = cfg_;
  cfg.rate_hz = ctx.rate_hz;
  cfg.horizon_steps = std::max<std::size_t>(
      cfg.horizon_steps, std::size_t(std::ceil(ctx.min_duration * ctx.rate_hz - 1e-9)));
  const auto candidates = sample_candidates(ctx.ego, cfg);
  if (candidates.empty()) return StraightPlanner().propose(ctx);
  const OccupancySequence current({ctx.state->occupancy}, {ctx.state->t});
  return select_best(candidates, current, *ctx.engine, TimeMatch::kClamp).trajectory;
}

Trajectory StraightPlanner::propose(const PlanningContext& ctx) {
  const double v = speed_ >= 0 ? speed_ : ctx.ego.speed;
  const auto steps = std::max<std::size_t>(1, std::size_t(std::ceil(ctx.min_duration * ctx.rate_hz - 1e-9)));
  std::vector<EgoPose> poses;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double tau = double(k) / ctx.rate_hz;
    EgoPose p = arc_point(ctx.ego, 0.0, v * tau);
    p.t = ctx.ego.t + tau;
    p.speed = v;
    p.reverse = false;
    poses.push_back(p);
  }
  return Trajectory(std::move(poses), ctx.rate_hz);
}

Trajectory StaticPlanner::propose(const PlanningContext& ctx) {
  return static_trajectory(
      ctx.ego, std::max<std::size_t>(1, std::size_t(std::ceil(ctx.min_duration * ctx.rate_hz - 1e-9))),
      ctx.rate_hz);
}

Trajectory ReplayPlanner::propose(const PlanningContext& ctx) {
  std::vector<EgoPose> poses;
  for (const auto& p : recorded_.poses())
    if (p.t > ctx.ego.t + 1e-9) poses.push_back(p);
  if (poses.empty()) throw std::runtime_error("replay planner: recorded trajectory exhausted");
  return Trajectory(std::move(poses), recorded_.rate_hz());
}

std::unique_ptr<Planner> make_planner(const std::string& name, const PlannerConfig& cfg,
                                      const Trajectory* recorded) {
  if (name == "arc-greedy") return std::make_unique<ArcGreedyPlanner>(cfg);
  if (name == "straight") return std::make_unique<StraightPlanner>();
  if (name == "static") return std::make_unique<StaticPlanner>();
  if (name == "replay") {
    if (!recorded) throw DataError("planner 'replay' needs a recorded trajectory");
    return std::make_unique<ReplayPlanner>(*recorded);
  }
  throw std::invalid_argument("unknown planner '" + name + "'");
}

}  // namespace occunav
