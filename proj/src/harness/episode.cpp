#include "lanechange/harness/episode.hpp"

#include <cmath>

#include "lanechange/reward.hpp"
#include "lanechange/safety_filter.hpp"
#include "lanechange/state_encoder.hpp"

namespace lanechange::harness {

namespace {

std::string_view category_name(reward::Category c) {
  switch (c) {
    case reward::Category::kCollision: return "collision";
    case reward::Category::kIllegalLaneChange: return "illegal";
    case reward::Category::kInvalidLaneChange: return "invalid";
    case reward::Category::kLegalLaneChange: return "legal";
    case reward::Category::kNormalDrive: return "normal";
  }
  return "?";
}

}  // namespace

std::string_view to_string(Phase p) { return p == Phase::kTrain ? "train" : "eval"; }

EpisodeResult play_episode(const RunConfig& cfg, std::uint64_t world_seed, Phase phase,
                           bool filter_on, const ChooseAction& choose, const Learn& learn,
                           TraceWriter* trace, int episode, double eps_for_metrics) {
  sim::WorldState world = sim::spawn_world(cfg.track, cfg.sim, world_seed);
  const double dt = cfg.sim.dt;
  const int keep_steps = std::max(1, static_cast<int>(std::lround(cfg.harness.keep_lane_period / dt)));

  EpisodeResult result;
  EpisodeMetrics& m = result.metrics;
  m.episode = episode;
  m.phase = phase;

  double discount = 1.0;
  bool done = false;
  encoding::StateTensor state = encoding::encode(world, cfg.encoder);
  while (!done) {
    const Action proposed = choose(state);
    const sim::VehicleState& ego = world.ego();
    const int lane = ego.lane;

    DecisionRecord record;
    record.time = world.time;
    record.proposed = proposed;
    reward::DecisionOutcome outcome;
    Action executed = Action::kKeepLane;

    if (is_lane_change(proposed)) {
      const int target = target_lane(lane, proposed);
      if (!cfg.track.lane_valid(target)) {
        outcome.illegal_lane_change = true;
        record.verdict = FilterVerdict::kIllegal;
        ++m.illegal;
      } else {
        const auto gap = sim::lane_gap_ahead(world, lane);
        outcome.invalid_lane_change = !gap || *gap > cfg.harness.invalid_lookahead;
        std::optional<sim::ManeuverPlan> plan = sim::plan_lane_change(world, target);
        bool accepted = true;
        if (filter_on) {
          const safety::Verdict verdict = safety::check_action(world, proposed, plan, cfg.safety);
          accepted = verdict.accepted();
          record.verdict = accepted ? FilterVerdict::kAccepted : FilterVerdict::kRejected;
          if (!accepted) {
            record.conflict_vehicle = verdict.conflict->vehicle_id;
            record.conflict_time = verdict.conflict->time;
            ++m.rejected;
          }
        }
        if (accepted) {
          world.active_maneuver = *plan;
          executed = proposed;
          outcome.legal_lane_change = !outcome.invalid_lane_change;
          ++m.lane_changes;
        }
      }
    }

    // Decision period: the whole maneuver for an executed change, a fixed period otherwise.
    double period_distance = 0.0;
    double period_time = 0.0;
    for (int k = 0;; ++k) {
      if (executed == Action::kKeepLane && k >= keep_steps) break;
      if (executed != Action::kKeepLane && !world.active_maneuver) break;
      period_distance += world.ego().speed * dt;
      const sim::StepEvents events = sim::step(world, dt);
      period_time += dt;
      ++m.wall_steps;
      if (trace) trace->step(episode, world, events);
      if (events.collision) {
        outcome.collision = true;
        m.collisions = 1;
        done = true;
      }
      if (events.lap_completed) {
        m.lap_completed = true;
        done = true;
      }
      if (world.time >= cfg.sim.max_episode_time - 1e-9) done = true;
      if (done) break;
    }
    m.distance_m += period_distance;
    outcome.avg_speed_mph = period_time > 0 ? sim::mps_to_mph(period_distance / period_time) : 0.0;

    const double r = reward::compute_reward(outcome, cfg.reward);
    encoding::StateTensor next = encoding::encode(world, cfg.encoder);
    dqn::Transition t{state, proposed, r, next, outcome.collision};
    if (learn) learn(dqn::Transition(t));
    result.transitions.push_back(std::move(t));
    result.rewards.push_back(r);
    m.discounted_return += discount * r;
    discount *= cfg.train.gamma;
    ++m.decisions;

    if (trace) {
      record.executed = executed;
      record.category = category_name(outcome.category());
      record.reward = r;
      trace->decision(episode, record);
    }
    state = std::move(next);
  }

  m.avg_speed_mph = world.time > 0 ? sim::mps_to_mph(m.distance_m / world.time) : 0.0;
  m.eps_at_end = eps_for_metrics;
  if (trace) {
    trace->episode_end(episode, EpisodeEndRecord{std::string(to_string(phase)), m.collisions > 0,
                                                 m.lane_changes, m.avg_speed_mph, m.distance_m,
                                                 m.discounted_return});
  }
  return result;
}

EpisodeResult run_episode(const RunConfig& cfg, std::uint64_t world_seed, dqn::DqnAgent& agent,
                          Phase mode, bool filter_on, TraceWriter* trace, int episode) {
  if (mode == Phase::kEval) {
    return play_episode(
        cfg, world_seed, mode, filter_on,
        [&](const encoding::StateTensor& s) { return agent.greedy(s); }, nullptr, trace, episode,
        0.0);
  }
  EpisodeResult result = play_episode(
      cfg, world_seed, mode, filter_on,
      [&](const encoding::StateTensor& s) {
        const Action a = agent.act(s);
        agent.decay_epsilon();
        return a;
      },
      [&](dqn::Transition&& t) { agent.observe(std::move(t)); }, trace, episode, 0.0);
  result.metrics.eps_at_end = agent.epsilon();
  return result;
}

EpisodeResult run_greedy_episode(const RunConfig& cfg, std::uint64_t world_seed,
                                 const dqn::Parameters<float>& params, bool filter_on,
                                 TraceWriter* trace, int episode) {
  return play_episode(
      cfg, world_seed, Phase::kEval, filter_on,
      [&](const encoding::StateTensor& s) { return dqn::greedy_action(dqn::forward(params, s)); },
      nullptr, trace, episode, 0.0);
}

}  // namespace lanechange::harness
