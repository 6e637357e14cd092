#include "lanechange/sim_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lanechange::sim {

namespace {

// Follow-controller gains.
constexpr double kStandstillGap = 10.0;  // m
constexpr double kTimeHeadway = 1.0;     // s
constexpr double kCruiseGain = 0.6;      // 1/s
constexpr double kComfortAccel = 3.0;    // m/s^2
constexpr double kGapGain = 0.25;        // 1/s^2
constexpr double kSpeedGain = 0.8;       // 1/s
constexpr double kBrakeMargin = 2.0;     // m kept in reserve when braking to the leader's speed
constexpr double kBrakeEngage = 0.5;     // m/s^2, gentler braking needs are left to the gap term

// NPCs in the ego lane spawn at least this far behind the (stationary) ego.
constexpr double kEgoRearClearance = 50.0;

constexpr double kLaneSnapTolerance = 0.2;

struct Ring {
  std::vector<std::size_t> order;  // vehicle indices sorted by (s, id)
  std::vector<std::size_t> rank;   // inverse permutation
};

Ring make_ring(const std::vector<VehicleState>& vehicles) {
  Ring ring;
  ring.order.resize(vehicles.size());
  std::iota(ring.order.begin(), ring.order.end(), std::size_t{0});
  std::sort(ring.order.begin(), ring.order.end(), [&](std::size_t a, std::size_t b) {
    if (vehicles[a].s != vehicles[b].s) return vehicles[a].s < vehicles[b].s;
    return vehicles[a].id < vehicles[b].id;
  });
  ring.rank.resize(vehicles.size());
  for (std::size_t p = 0; p < ring.order.size(); ++p) ring.rank[ring.order[p]] = p;
  return ring;
}

std::optional<LeadVehicle> leader_in_ring(const WorldState& world, const Ring& ring,
                                          std::size_t index, double d) {
  const auto& vehicles = world.vehicles;
  const std::size_t n = vehicles.size();
  const VehicleState& self = vehicles[index];
  for (std::size_t k = 1; k < n; ++k) {
    const VehicleState& other = vehicles[ring.order[(ring.rank[index] + k) % n]];
    if (std::abs(other.d - d) >= kLateralConflictWidth) continue;
    const double ahead = forward_offset(self.s, other.s, world.track.lap_length);
    return LeadVehicle{ahead - 0.5 * (self.length + other.length), other.speed};
  }
  return std::nullopt;
}

std::optional<std::pair<int, int>> collision_in_ring(const WorldState& world, const Ring& ring) {
  const auto& vehicles = world.vehicles;
  const std::size_t n = vehicles.size();
  if (n < 2) return std::nullopt;
  double max_length = 0.0;
  for (const auto& v : vehicles) max_length = std::max(max_length, v.length);

  std::optional<std::pair<int, int>> first;
  for (std::size_t p = 0; p < n; ++p) {
    const VehicleState& a = vehicles[ring.order[p]];
    for (std::size_t k = 1; k < n; ++k) {
      const VehicleState& b = vehicles[ring.order[(p + k) % n]];
      const double ahead = forward_offset(a.s, b.s, world.track.lap_length);
      if (ahead >= 0.5 * (a.length + max_length)) break;
      if (ahead < 0.5 * (a.length + b.length) && std::abs(a.d - b.d) < kLateralConflictWidth) {
        const std::pair<int, int> pair{std::min(a.id, b.id), std::max(a.id, b.id)};
        if (!first || pair < *first) first = pair;
      }
    }
  }
  return first;
}

// Places `count` centers with pairwise spacing >= pitch, uniformly over valid configurations.
std::vector<double> place_on_ring(Rng& rng, int count, double lap, double pitch) {
  std::vector<double> u(static_cast<std::size_t>(count));
  const double slack = lap - count * pitch;
  for (auto& x : u) x = uniform(rng, 0.0, slack);
  std::sort(u.begin(), u.end());
  const double offset = uniform(rng, 0.0, lap);
  for (int i = 0; i < count; ++i) u[i] = wrap_position(offset + u[i] + i * pitch, lap);
  return u;
}

std::vector<double> place_on_segment(Rng& rng, int count, double lo, double hi, double pitch) {
  std::vector<double> u(static_cast<std::size_t>(count));
  const double slack = (hi - lo) - (count - 1) * pitch;
  for (auto& x : u) x = uniform(rng, 0.0, slack);
  std::sort(u.begin(), u.end());
  for (int i = 0; i < count; ++i) u[i] = lo + u[i] + i * pitch;
  return u;
}

}  // namespace

void TrackConfig::validate() const {
  if (!(lap_length > 0.0)) throw std::invalid_argument("track: lap_length must be positive");
  if (lane_count < 2) throw std::invalid_argument("track: lane_count must be at least 2");
  if (!(lane_width > kVehicleWidth))
    throw std::invalid_argument("track: lane_width must exceed the vehicle width");
  if (!(speed_limit > 0.0)) throw std::invalid_argument("track: speed_limit must be positive");
}

void SimConfig::validate(const TrackConfig& track) const {
  if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be positive");
  if (npc_count < 0) throw std::invalid_argument("sim: npc_count must be non-negative");
  if (!(npc_speed_min > 0.0) || npc_speed_min > npc_speed_max ||
      npc_speed_max > track.speed_limit)
    throw std::invalid_argument("sim: npc speed range must lie within (0, speed_limit]");
  if (min_spawn_gap < 0.0) throw std::invalid_argument("sim: min_spawn_gap must be non-negative");
  if (!(max_episode_time > 0.0))
    throw std::invalid_argument("sim: max_episode_time must be positive");
}

double ManeuverPlan::lateral(double tau, int order) const {
  tau = std::clamp(tau, 0.0, duration);
  double value = 0.0;
  double power = 1.0;
  for (int k = order; k < 6; ++k) {
    double factor = 1.0;
    for (int m = 0; m < order; ++m) factor *= (k - m);
    value += coeffs[k] * factor * power;
    power *= tau;
  }
  return value;
}

const VehicleState& WorldState::ego() const {
  for (const auto& v : vehicles)
    if (v.is_ego) return v;
  throw std::logic_error("world has no ego vehicle");
}

VehicleState& WorldState::ego() {
  return const_cast<VehicleState&>(static_cast<const WorldState&>(*this).ego());
}

double wrap_position(double s, double lap_length) {
  if (s >= 0.0 && s < lap_length) return s;
  // Exact for one lap either side (same result as fmod, without its cost).
  if (s >= lap_length && s < 2.0 * lap_length) return s - lap_length;
  double r = std::fmod(s, lap_length);
  if (r < 0.0) r += lap_length;
  if (r >= lap_length) r = 0.0;
  return r;
}

double forward_offset(double from, double to, double lap_length) {
  return wrap_position(to - from, lap_length);
}

double signed_offset(double from, double to, double lap_length) {
  double f = forward_offset(from, to, lap_length);
  if (f >= 0.5 * lap_length) f -= lap_length;
  return f;
}

WorldState spawn_world(const TrackConfig& track, const SimConfig& sim, std::uint64_t seed) {
  track.validate();
  sim.validate(track);

  const double pitch = kVehicleLength + sim.min_spawn_gap;
  if (sim.npc_count * pitch > track.lap_length * track.lane_count)
    throw std::invalid_argument("spawn_world: " + std::to_string(sim.npc_count) +
                                " NPCs with gap " + std::to_string(sim.min_spawn_gap) +
                                " m do not fit on the track");

  WorldState world;
  world.track = track;
  world.sim = sim;
  world.rng.seed(seed);

  const int ego_lane = track.middle_lane();
  VehicleState ego;
  ego.id = 0;
  ego.s = 0.0;
  ego.lane = ego_lane;
  ego.d = track.lane_center(ego_lane);
  ego.speed = 0.0;
  ego.desired_speed = track.speed_limit;
  ego.is_ego = true;
  world.vehicles.push_back(ego);
  world.ego_id = ego.id;

  // Ego lane is a segment [front, back] relative to the ego, other lanes are full rings.
  const double front = kVehicleLength + sim.min_spawn_gap;
  const double back = track.lap_length - std::max(pitch, kEgoRearClearance + kVehicleLength);
  std::vector<int> capacity(static_cast<std::size_t>(track.lane_count));
  for (int lane = 0; lane < track.lane_count; ++lane) {
    if (lane == ego_lane) {
      capacity[lane] = back < front ? 0 : static_cast<int>(std::floor((back - front) / pitch)) + 1;
    } else {
      capacity[lane] = static_cast<int>(std::floor(track.lap_length / pitch));
    }
  }
  if (std::accumulate(capacity.begin(), capacity.end(), 0) < sim.npc_count)
    throw std::invalid_argument("spawn_world: NPC count exceeds per-lane packing capacity");

  std::vector<int> count(capacity.size(), 0);
  for (int i = 0; i < sim.npc_count; ++i) {
    std::vector<int> open;
    for (int lane = 0; lane < track.lane_count; ++lane)
      if (count[lane] < capacity[lane]) open.push_back(lane);
    ++count[open[uniform_index(world.rng, open.size())]];
  }

  int next_id = 1;
  for (int lane = 0; lane < track.lane_count; ++lane) {
    if (count[lane] == 0) continue;
    std::vector<double> centers =
        lane == ego_lane ? place_on_segment(world.rng, count[lane], front, back, pitch)
                         : place_on_ring(world.rng, count[lane], track.lap_length, pitch);
    std::sort(centers.begin(), centers.end());
    for (double s : centers) {
      VehicleState npc;
      npc.id = next_id++;
      npc.s = s;
      npc.lane = lane;
      npc.d = track.lane_center(lane);
      npc.speed = uniform(world.rng, sim.npc_speed_min, sim.npc_speed_max);
      npc.desired_speed = npc.speed;
      world.vehicles.push_back(npc);
    }
  }
  return world;
}

double safe_gap(double speed) { return kStandstillGap + kTimeHeadway * speed; }

double follow_controller(double ego_speed, std::optional<LeadVehicle> lead, double limit) {
  double accel = std::min(kCruiseGain * (limit - ego_speed), kComfortAccel);
  if (lead) {
    double follow = kGapGain * (lead->gap - safe_gap(ego_speed)) +
                    kSpeedGain * (lead->speed - ego_speed);
    const double closing = ego_speed - lead->speed;
    if (closing > 0.0) {
      const double room = std::max(lead->gap - kBrakeMargin, 0.1);
      const double needed = closing * closing / (2.0 * room);
      if (needed > kBrakeEngage) follow = std::min(follow, -needed);
    }
    accel = std::min(accel, follow);
  }
  return std::clamp(accel, -kMaxAccel, kMaxAccel);
}

double min_lane_change_duration(double lateral_shift) {
  const double shift = std::abs(lateral_shift);
  if (shift == 0.0) return 0.0;
  // Quintic min-jerk profile: peak |d''| = (10/sqrt(3)) D / T^2, peak |d'''| = 60 D / T^3.
  const double t_accel = std::sqrt(10.0 / std::sqrt(3.0) * shift / kMaxAccel);
  const double t_jerk = std::cbrt(60.0 * shift / kMaxJerk);
  const double t = std::max(t_accel, t_jerk);
  return std::ceil(t * 10.0 - 1e-9) / 10.0;
}

ManeuverPlan plan_lane_change(const WorldState& world, int target_lane) {
  if (world.active_maneuver)
    throw std::logic_error("plan_lane_change: a maneuver is already active");
  const VehicleState& ego = world.ego();
  if (!world.track.lane_valid(target_lane) || std::abs(target_lane - ego.lane) > 1)
    throw std::invalid_argument("plan_lane_change: lane " + std::to_string(target_lane) +
                                " is not adjacent to lane " + std::to_string(ego.lane));

  ManeuverPlan plan;
  plan.start_time = world.time;
  plan.source_lane = ego.lane;
  plan.target_lane = target_lane;
  plan.coeffs[0] = ego.d;
  if (target_lane == ego.lane) return plan;

  const double shift = world.track.lane_center(target_lane) - ego.d;
  const double t = min_lane_change_duration(shift);
  plan.duration = t;
  plan.coeffs[3] = 10.0 * shift / std::pow(t, 3);
  plan.coeffs[4] = -15.0 * shift / std::pow(t, 4);
  plan.coeffs[5] = 6.0 * shift / std::pow(t, 5);
  return plan;
}

std::optional<LeadVehicle> find_leader_at(const WorldState& world, std::size_t index, double d) {
  return leader_in_ring(world, make_ring(world.vehicles), index, d);
}

std::optional<LeadVehicle> find_leader(const WorldState& world, std::size_t index) {
  return find_leader_at(world, index, world.vehicles.at(index).d);
}

std::optional<double> lane_gap_ahead(const WorldState& world, int lane) {
  const VehicleState& ego = world.ego();
  std::optional<double> best;
  for (const auto& v : world.vehicles) {
    if (v.is_ego || v.lane != lane) continue;
    const double gap = forward_offset(ego.s, v.s, world.track.lap_length) -
                       0.5 * (ego.length + v.length);
    if (!best || gap < *best) best = gap;
  }
  return best;
}

StepEvents step(WorldState& world, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  StepEvents events;
  auto& vehicles = world.vehicles;
  const double lap = world.track.lap_length;
  const double limit = world.track.speed_limit;

  const Ring ring = make_ring(vehicles);
  std::vector<double> accel(vehicles.size(), 0.0);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const VehicleState& v = vehicles[i];
    if (v.is_ego) {
      // Speed is held while a lane change is in progress.
      if (!world.active_maneuver)
        accel[i] = follow_controller(v.speed, leader_in_ring(world, ring, i, v.d), limit);
    } else if (world.sim.npc_behavior == NpcBehavior::kCarFollowing) {
      accel[i] = follow_controller(v.speed, leader_in_ring(world, ring, i, v.d),
                                   std::min(v.desired_speed, limit));
    }
  }

  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    VehicleState& v = vehicles[i];
    const double advanced = v.s + v.speed * dt;
    if (v.is_ego && advanced >= lap) events.lap_completed = true;
    v.s = wrap_position(advanced, lap);
    v.speed = std::max(0.0, v.speed + accel[i] * dt);
  }

  world.time += dt;

  if (world.active_maneuver) {
    const ManeuverPlan& plan = *world.active_maneuver;
    VehicleState& ego = world.ego();
    const double elapsed = world.time - plan.start_time;
    if (elapsed >= plan.duration - 1e-6) {
      const double center = world.track.lane_center(plan.target_lane);
      if (std::abs(plan.end_position() - center) < kLaneSnapTolerance) {
        ego.d = center;
        ego.lane = plan.target_lane;
        events.lane_change_completed = plan.target_lane != plan.source_lane;
      }
      world.active_maneuver.reset();
    } else {
      ego.d = plan.lateral_position(elapsed);
    }
  }

  events.collision = collision_in_ring(world, make_ring(vehicles));
  return events;
}

std::optional<std::pair<int, int>> detect_collision(const WorldState& world) {
  return collision_in_ring(world, make_ring(world.vehicles));
}

}  // namespace lanechange::sim
