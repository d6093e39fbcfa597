#include "occunav/rollout.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "occunav/io.hpp"

namespace occunav {

// ---- noise ------------------------------------------------------------------

void NoiseSchedule::validate() const {
  auto in_unit = [](const Eigen::VectorXd& v) {
    return v.size() == 0 || ((v.array() >= 0.0).all() && (v.array() <= 1.0).all());
  };
  if (!in_unit(frame_levels) || !in_unit(view_levels))
    throw std::invalid_argument("noise schedule: levels must lie in [0, 1]");
}

NoiseSchedule sample_noise_schedule(std::size_t n_frames, std::size_t n_views, std::uint64_t seed,
                                    const LevelDistribution& dist) {
  if (n_frames < 1 || n_views < 1)
    throw std::invalid_argument("noise schedule: extents must be >= 1");
  std::mt19937_64 rng(seed);
  auto draw = [&]() -> double {
    if (dist.kind == LevelDistribution::Kind::kConstant) return dist.value;
    return std::uniform_real_distribution<double>(dist.lo, dist.hi)(rng);
  };
  NoiseSchedule s;
  s.seed = seed;
  s.frame_levels.resize(Eigen::Index(n_frames));
  s.view_levels.resize(Eigen::Index(n_views));
  for (auto& a : s.frame_levels) a = draw();
  for (auto& b : s.view_levels) b = draw();
  s.validate();
  return s;
}

FrameStack corrupt(const FrameStack& states, const NoiseSchedule& schedule, std::mt19937_64& rng) {
  if (std::size_t(schedule.frame_levels.size()) != states.n_frames ||
      std::size_t(schedule.view_levels.size()) != states.n_views)
    throw std::invalid_argument("corrupt: schedule shape does not match the frame stack");
  if (std::size_t(states.cells.cols()) != states.n_frames * states.n_views)
    throw std::invalid_argument("corrupt: frame stack has inconsistent shape");
  FrameStack out = states;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < states.n_frames; ++i)
    for (std::size_t j = 0; j < states.n_views; ++j) {
      const double alpha = schedule.frame_levels[Eigen::Index(i)];
      const double beta = schedule.view_levels[Eigen::Index(j)];
      auto cell = out.cell(i, j);
      for (Eigen::Index e = 0; e < cell.size(); ++e) {
        const double eps_frame = normal(rng);
        const double eps_view = normal(rng);
        if (alpha != 0.0 || beta != 0.0) cell[e] += alpha * eps_frame + beta * eps_view;
      }
    }
  return out;
}

// ---- windows ----------------------------------------------------------------

WindowPlan plan_frame_ar(std::size_t t, std::size_t context, std::size_t total) {
  if (context < 1) throw std::invalid_argument("plan_frame_ar: K must be >= 1");
  if (t + 1 >= total) throw std::out_of_range("plan_frame_ar: no frame left after t");
  WindowPlan w;
  for (std::size_t i = (t + 1 >= context ? t + 1 - context : 0); i <= t; ++i) w.context.push_back(i);
  w.outputs.push_back(t + 1);
  return w;
}

WindowPlan plan_clip_ar(std::size_t t, std::size_t context, std::size_t horizon, std::size_t total) {
  if (context < 1 || horizon < 1) throw std::invalid_argument("plan_clip_ar: M and L must be >= 1");
  if (t + 1 >= total) throw std::out_of_range("plan_clip_ar: no frame left after t");
  WindowPlan w;
  const std::size_t n_ctx = std::min(context, t + 1);
  for (std::size_t i = t + 1 - n_ctx; i <= t; ++i) w.context.push_back(i);
  for (std::size_t i = t + 1; i <= std::min(t + horizon, total - 1); ++i) w.outputs.push_back(i);
  return w;
}

void RolloutPlan::validate() const {
  if (context < 1) throw std::invalid_argument("rollout plan: context must be >= 1");
  if (mode == Mode::kClip && horizon < 1) throw std::invalid_argument("rollout plan: horizon must be >= 1");
  if (total_frames < 1) throw std::invalid_argument("rollout plan: total_frames must be >= 1");
}

WindowPlan RolloutPlan::window(std::size_t t) const {
  return mode == Mode::kFrame ? plan_frame_ar(t, context, total_frames)
                              : plan_clip_ar(t, context, horizon, total_frames);
}

std::vector<WindowPlan> RolloutPlan::chain() const {
  validate();
  std::vector<WindowPlan> out;
  for (std::size_t t = 0; t + 1 < total_frames; t = out.back().outputs.back()) out.push_back(window(t));
  return out;
}

RolloutPlan rollout_plan_from_json(const nlohmann::json& j) {
  RolloutPlan p;
  try {
    const auto mode = j.value("mode", std::string("clip"));
    if (mode == "frame") p.mode = RolloutPlan::Mode::kFrame;
    else if (mode == "clip") p.mode = RolloutPlan::Mode::kClip;
    else throw DataError("rollout plan: unknown mode '" + mode + "'");
    p.context = j.value("context", p.context);
    p.horizon = j.value("horizon", p.horizon);
    p.total_frames = j.value("total_frames", p.total_frames);
    p.validate();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("rollout plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return p;
}

nlohmann::json to_json(const RolloutPlan& p) {
  return {{"mode", p.mode == RolloutPlan::Mode::kFrame ? "frame" : "clip"},
          {"context", p.context},
          {"horizon", p.horizon},
          {"total_frames", p.total_frames}};
}

// ---- playback ---------------------------------------------------------------

PlaybackGenerator::PlaybackGenerator(OccupancySequence seq, PlaybackOptions options)
    : seq_(std::move(seq)), options_(std::move(options)), rng_(options_.seed) {
  if (seq_.empty()) throw std::invalid_argument("playback: empty occupancy sequence");
  if (options_.rig && (options_.render_height < 1 || options_.render_width < 1))
    throw std::invalid_argument("playback: render extents must be >= 1 when a rig is set");
}

WorldStatePtr PlaybackGenerator::make_state(std::size_t frame, const EgoPose& ego) {
  auto state = std::make_shared<WorldState>();
  state->t = seq_.timestamps().at(frame);
  state->occupancy = seq_.grid(frame);
  if (options_.rig) {
    state->views = render_views(state->occupancy, *options_.rig, ego, options_.render_height,
                                options_.render_width);
    if (options_.depth_noise) {
      const std::size_t n_views = state->views.size();
      const Eigen::Index n_px = Eigen::Index(options_.render_height) * options_.render_width;
      FrameStack stack(1, n_views, n_px);
      for (std::size_t v = 0; v < n_views; ++v)
        stack.cell(0, v) = Eigen::Map<const Eigen::ArrayXf>(state->views[v].depth.data(), n_px)
                               .cast<double>().matrix();
      const auto schedule = sample_noise_schedule(1, n_views, rng_(), *options_.depth_noise);
      const FrameStack noisy = corrupt(stack, schedule, rng_);
      for (std::size_t v = 0; v < n_views; ++v) {
        auto& depth = state->views[v].depth;
        for (Eigen::Index i = 0; i < n_px; ++i)
          if (depth.data()[i] > 0)
            depth.data()[i] = std::max(1e-3f, static_cast<float>(noisy.cell(0, v)[i]));
      }
    }
  }
  return state;
}

WorldStatePtr PlaybackGenerator::initial_state(const EgoPose& ego) { return make_state(0, ego); }

std::vector<WorldStatePtr> PlaybackGenerator::step(const GenerationRequest& request) {
  std::vector<WorldStatePtr> out;
  for (std::size_t k = 0; k < request.output_frames.size(); ++k) {
    const std::size_t frame = request.output_frames[k];
    if (frame >= seq_.size()) throw std::out_of_range("playback: scenario exhausted");
    const EgoPose ego = k < request.output_poses.size() ? request.output_poses[k] : EgoPose{};
    out.push_back(make_state(frame, ego));
  }
  return out;
}

// ---- closed loop ------------------------------------------------------------

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kHorizon: return "horizon";
    case Termination::kCollision: return "collision";
    case Termination::kOffDrivable: return "off_drivable";
  }
  return "unknown";
}

std::vector<RewardBreakdown> EpisodeLog::rewards() const {
  std::vector<RewardBreakdown> out;
  for (const auto& s : steps) out.insert(out.end(), s.rewards.begin(), s.rewards.end());
  return out;
}

namespace {

constexpr double kTimeTol = 1e-9;

// Nearest state by time over frames [first, last]; ties to the earlier frame.
const WorldState& nearest_state(const std::vector<WorldStatePtr>& states, std::size_t first,
                                std::size_t last, double t) {
  std::size_t best = first;
  for (std::size_t i = first + 1; i <= last; ++i)
    if (std::abs(states[i]->t - t) < std::abs(states[best]->t - t)) best = i;
  return *states[best];
}

}  // namespace

EpisodeLog run_closed_loop(WorldGenerator& gen, Planner& planner, const RewardEngine& engine,
                           const ClosedLoopConfig& cfg) {
  if (cfg.horizon_frames < 1) throw std::invalid_argument("closed loop: horizon must be >= 1");
  const std::size_t total = cfg.horizon_frames + 1;
  if (gen.frame_count() < total)
    throw std::out_of_range("closed loop: scenario exhausted before horizon (" +
                            std::to_string(gen.frame_count()) + " frames for horizon " +
                            std::to_string(cfg.horizon_frames) + ")");
  RolloutPlan plan = cfg.plan;
  plan.total_frames = total;
  plan.validate();

  EpisodeLog log;
  log.scenario_id = cfg.scenario_id;
  log.planner = planner.name();

  std::vector<WorldStatePtr> states(total);
  EgoPose ego = cfg.initial;
  ego.t = gen.frame_time(0);
  states[0] = gen.initial_state(ego);
  std::vector<EgoPose> executed{ego};
  double reward_sum = 0;
  std::size_t reward_count = 0;

  auto terminal = [&](const RewardBreakdown& b) -> std::optional<Termination> {
    if (b.collided && cfg.termination.on_collision) return Termination::kCollision;
    if (b.off_drivable && cfg.termination.on_off_drivable) return Termination::kOffDrivable;
    return std::nullopt;
  };

  std::optional<Termination> stop;
  std::size_t t = 0;
  while (!stop && t + 1 < total) {
    StepLog step;
    step.frame = t;
    const WindowPlan window = plan.window(t);
    step.context = window.context;
    step.outputs = window.outputs;
    const double t_end = gen.frame_time(window.outputs.back());

    if (t == 0) {
      const auto b = engine.score(states[0]->occupancy, ego);
      step.rewards.push_back(b);
      stop = terminal(b);
      if (stop) {
        reward_sum += b.total;
        ++reward_count;
        log.steps.push_back(std::move(step));
        break;
      }
    }

    PlanningContext ctx{ego, states[t], &engine, t_end - ego.t, cfg.rate_hz};
    const Trajectory proposal = planner.propose(ctx);
    std::vector<EgoPose> segment;
    for (const auto& p : proposal.poses())
      if (p.t > ego.t + kTimeTol && p.t <= t_end + kTimeTol) segment.push_back(p);
    if (segment.empty() || proposal.back().t < t_end - 0.5 / cfg.rate_hz)
      throw std::runtime_error("closed loop: planner '" + planner.name() +
                               "' proposal does not reach the next frame");

    GenerationRequest request;
    request.context_frames = window.context;
    for (auto c : window.context) {
      request.context.push_back(states[c]);
      request.context_noise.push_back(cfg.context_noise);
    }
    request.output_frames = window.outputs;
    for (auto f : window.outputs) {
      const double tf = gen.frame_time(f);
      const auto it = std::min_element(segment.begin(), segment.end(), [&](const EgoPose& a, const EgoPose& b) {
        return std::abs(a.t - tf) < std::abs(b.t - tf);
      });
      request.output_poses.push_back(*it);
    }
    RayMap conditioning;
    if (cfg.rig) {
      std::vector<EgoPose> window_poses{ego};
      window_poses.insert(window_poses.end(), segment.begin(), segment.end());
      conditioning = normalized_raymap(*cfg.rig, Trajectory(window_poses, cfg.rate_hz),
                                       cfg.raymap_height, cfg.raymap_width);
      request.conditioning = &conditioning;
    }

    const auto started = std::chrono::steady_clock::now();
    auto generated = gen.step(request);
    step.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (generated.size() != window.outputs.size())
      throw std::runtime_error("closed loop: generator returned " + std::to_string(generated.size()) +
                               " states for " + std::to_string(window.outputs.size()) + " frames");
    for (std::size_t k = 0; k < generated.size(); ++k) states[window.outputs[k]] = std::move(generated[k]);

    for (const auto& p : segment) {
      const auto b = engine.score(nearest_state(states, t, window.outputs.back(), p.t).occupancy, p);
      step.rewards.push_back(b);
      executed.push_back(p);
      ego = p;
      if ((stop = terminal(b))) break;
    }
    for (const auto& b : step.rewards) {
      reward_sum += b.total;
      ++reward_count;
    }
    log.steps.push_back(std::move(step));
    if (!stop) t = window.outputs.back();
  }

  log.termination = stop.value_or(Termination::kHorizon);
  log.frames_completed = t;
  log.executed = Trajectory(std::move(executed), cfg.rate_hz);
  log.average_reward = reward_count ? reward_sum / double(reward_count) : 0.0;
  return log;
}

nlohmann::json to_json(const EpisodeLog& log, bool include_latency) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : log.steps) {
    nlohmann::json rewards = nlohmann::json::array();
    for (const auto& b : s.rewards) rewards.push_back(to_json(b));
    nlohmann::json js{{"frame", s.frame}, {"context", s.context}, {"outputs", s.outputs}, {"rewards", rewards}};
    if (include_latency) js["latency_ms"] = s.latency_ms;
    steps.push_back(std::move(js));
  }
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& p : log.executed.poses())
    traj.push_back({{"t", p.t}, {"x", p.x}, {"y", p.y}, {"yaw", p.yaw}, {"speed", p.speed}, {"reverse", p.reverse}});
  return {{"scenario", log.scenario_id},
          {"planner", log.planner},
          {"termination", to_string(log.termination)},
          {"frames_completed", log.frames_completed},
          {"average_reward", log.average_reward},
          {"executed", traj},
          {"steps", steps}};
}

}  // namespace occunav
