#include "lanechange/safety_filter.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lanechange::safety {

namespace {

std::size_t sample_count(double horizon, double sample_dt) {
  return static_cast<std::size_t>(std::ceil(horizon / sample_dt - 1e-9)) + 1;
}

}  // namespace

double SafetyConfig::horizon_for(const sim::ManeuverPlan& plan) const {
  return horizon ? *horizon : plan.duration + horizon_tail;
}

void SafetyConfig::validate() const {
  if (horizon && !(*horizon > 0.0)) throw std::invalid_argument("safety: horizon must be positive");
  if (horizon_tail < 0.0) throw std::invalid_argument("safety: horizon_tail must be non-negative");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("safety: sample_dt must be positive");
  if (!(min_gap > 0.0)) throw std::invalid_argument("safety: min_gap must be positive");
  if (!(lateral_conflict_width > 0.0))
    throw std::invalid_argument("safety: lateral_conflict_width must be positive");
}

std::vector<PredictedTrajectory> predict_neighbors(const sim::WorldState& world, double horizon,
                                                   const SafetyConfig& cfg) {
  const std::size_t n = sample_count(horizon, cfg.sample_dt);
  std::vector<PredictedTrajectory> out;
  for (const auto& v : world.vehicles) {
    if (v.is_ego) continue;
    PredictedTrajectory traj{v.id, v.length, {}};
    traj.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * cfg.sample_dt;
      traj.samples.push_back({t, sim::wrap_position(v.s + v.speed * t, world.track.lap_length), v.d});
    }
    out.push_back(std::move(traj));
  }
  return out;
}

PredictedTrajectory predict_ego(const sim::WorldState& world, const sim::ManeuverPlan& plan,
                                double horizon, const SafetyConfig& cfg) {
  const sim::VehicleState& ego = world.ego();
  const std::size_t n = sample_count(horizon, cfg.sample_dt);
  const double final_d = plan.target_lane == plan.source_lane
                             ? ego.d
                             : world.track.lane_center(plan.target_lane);
  PredictedTrajectory traj{ego.id, ego.length, {}};
  traj.samples.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.sample_dt;
    const double d = t < plan.duration ? plan.lateral_position(t) : final_d;
    traj.samples.push_back({t, sim::wrap_position(ego.s + ego.speed * t, world.track.lap_length), d});
  }
  return traj;
}

std::string Conflict::describe() const {
  std::ostringstream os;
  os << "vehicle " << vehicle_id << " at t=+" << time << "s, clearance " << clearance << " m";
  return os.str();
}

Verdict check_action(const sim::WorldState& world, Action action,
                     const std::optional<sim::ManeuverPlan>& plan, const SafetyConfig& cfg) {
  if (is_lane_change(action) != plan.has_value())
    throw std::invalid_argument("check_action: a plan is required exactly for lane changes");
  if (!is_lane_change(action)) return {};

  const double horizon = cfg.horizon_for(*plan);
  const PredictedTrajectory ego = predict_ego(world, *plan, horizon, cfg);
  const double lap = world.track.lap_length;
  for (const auto& other : predict_neighbors(world, horizon, cfg)) {
    const double required = cfg.min_gap + 0.5 * (ego.length + other.length);
    for (std::size_t k = 0; k < ego.samples.size(); ++k) {
      const TrajectorySample& e = ego.samples[k];
      const TrajectorySample& o = other.samples[k];
      if (std::abs(e.d - o.d) >= cfg.lateral_conflict_width) continue;
      const double separation = std::abs(sim::signed_offset(e.s, o.s, lap));
      if (separation < required) {
        return Verdict{Conflict{other.vehicle_id, e.t,
                                separation - 0.5 * (ego.length + other.length)}};
      }
    }
  }
  return {};
}

}  // namespace lanechange::safety
