#pragma once

// Deterministic three-lane looped highway simulated directly in Frenet
// coordinates (s along the loop, d across it). The ego car is driven by a
// follow controller plus quintic lane-change maneuvers; NPCs keep their lane.

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lanechange/random.hpp"

namespace lanechange::sim {

inline constexpr double kMpsPerMph = 0.44704;
inline double mph_to_mps(double mph) { return mph * kMpsPerMph; }
inline double mps_to_mph(double mps) { return mps / kMpsPerMph; }

inline constexpr double kVehicleLength = 5.5;
inline constexpr double kVehicleWidth = 2.0;
// Two cars whose lateral centers are closer than this can touch.
inline constexpr double kLateralConflictWidth = 2.8;

// Comfort limits shared by the lateral planner and the follow controller.
inline constexpr double kMaxAccel = 10.0;  // m/s^2
inline constexpr double kMaxJerk = 10.0;   // m/s^3

struct TrackConfig {
  double lap_length = 6946.0;
  int lane_count = 3;
  double lane_width = 4.0;
  double speed_limit = 22.352;  // 50 MPH

  double lane_center(int lane) const { return (lane + 0.5) * lane_width; }
  bool lane_valid(int lane) const { return lane >= 0 && lane < lane_count; }
  int middle_lane() const { return lane_count / 2; }

  void validate() const;
  bool operator==(const TrackConfig&) const = default;
};

enum class NpcBehavior {
  kCarFollowing,  // follow controller against the nearest conflicting leader
  kHoldSpeed,     // constant speed, ignores everyone (prediction-exact test traffic)
};

struct SimConfig {
  double dt = 0.1;
  int npc_count = 120;  // about 5.8 cars per km per lane
  double npc_speed_min = 13.4;  // 30 MPH
  double npc_speed_max = 20.1;  // 45 MPH
  double min_spawn_gap = 15.0;
  double max_episode_time = 450.0;
  NpcBehavior npc_behavior = NpcBehavior::kCarFollowing;

  void validate(const TrackConfig& track) const;
  bool operator==(const SimConfig&) const = default;
};

struct VehicleState {
  int id = 0;
  double s = 0.0;
  double d = 0.0;
  int lane = 0;
  double speed = 0.0;
  double desired_speed = 0.0;  // NPC cruise speed; the ego cruises at the speed limit
  double length = kVehicleLength;
  bool is_ego = false;

  bool operator==(const VehicleState&) const = default;
};

// Quintic lateral profile d(tau) over tau in [0, duration], tau measured from start_time.
struct ManeuverPlan {
  double start_time = 0.0;
  double duration = 0.0;
  int source_lane = 0;
  int target_lane = 0;
  std::array<double, 6> coeffs{};  // d(tau) = sum coeffs[k] * tau^k

  // Derivative `order` (0..3) of the profile, with tau clamped to [0, duration].
  double lateral(double tau, int order = 0) const;
  double lateral_position(double tau) const { return lateral(tau, 0); }
  double end_position() const { return lateral(duration, 0); }

  bool operator==(const ManeuverPlan&) const = default;
};

struct WorldState {
  TrackConfig track;
  SimConfig sim;
  double time = 0.0;
  std::vector<VehicleState> vehicles;
  int ego_id = 0;
  Rng rng;
  std::optional<ManeuverPlan> active_maneuver;

  const VehicleState& ego() const;
  VehicleState& ego();

  bool operator==(const WorldState&) const = default;
};

struct StepEvents {
  std::optional<std::pair<int, int>> collision;
  bool lap_completed = false;
  bool lane_change_completed = false;
};

struct LeadVehicle {
  double gap = 0.0;    // bumper-to-bumper clearance, m
  double speed = 0.0;  // m/s
};

// Longitudinal offset from `from` to `to` wrapped into [-lap/2, lap/2).
double signed_offset(double from, double to, double lap_length);
// Forward distance from `from` to `to` wrapped into [0, lap).
double forward_offset(double from, double to, double lap_length);
double wrap_position(double s, double lap_length);

WorldState spawn_world(const TrackConfig& track, const SimConfig& sim, std::uint64_t seed);

// Constant time-headway gap used by the follow controller.
double safe_gap(double speed);

double follow_controller(double ego_speed, std::optional<LeadVehicle> lead, double limit);

// Smallest duration (rounded up to 0.1 s) for which a quintic shift of
// `lateral_shift` meters respects kMaxAccel and kMaxJerk.
double min_lane_change_duration(double lateral_shift);

ManeuverPlan plan_lane_change(const WorldState& world, int target_lane);

// Nearest vehicle ahead of vehicles[index] whose lateral center lies within
// kLateralConflictWidth of `d` (defaults to the vehicle's own d).
std::optional<LeadVehicle> find_leader(const WorldState& world, std::size_t index);
std::optional<LeadVehicle> find_leader_at(const WorldState& world, std::size_t index, double d);

// Clearance to the nearest vehicle ahead of the ego whose lane index is `lane`.
std::optional<double> lane_gap_ahead(const WorldState& world, int lane);

StepEvents step(WorldState& world, double dt);

std::optional<std::pair<int, int>> detect_collision(const WorldState& world);

}  // namespace lanechange::sim
