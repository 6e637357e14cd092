#pragma once

// Rule-based veto of lane changes: the ego's planned path and constant-velocity,
// lane-keeping predictions of every other car are sampled on a common time grid
// and the change is rejected if any laterally conflicting pair gets too close.

#include <optional>
#include <string>
#include <vector>

#include "lanechange/action.hpp"
#include "lanechange/sim_core.hpp"

namespace lanechange::safety {

struct SafetyConfig {
  // Fixed prediction horizon; when unset it is the maneuver duration + horizon_tail.
  std::optional<double> horizon;
  double horizon_tail = 1.0;
  double sample_dt = 0.1;
  double min_gap = 8.0;  // clearance required beyond both half-lengths
  double lateral_conflict_width = sim::kLateralConflictWidth;

  double horizon_for(const sim::ManeuverPlan& plan) const;
  void validate() const;
  bool operator==(const SafetyConfig&) const = default;
};

struct TrajectorySample {
  double t = 0.0;
  double s = 0.0;
  double d = 0.0;
};

struct PredictedTrajectory {
  int vehicle_id = 0;
  double length = sim::kVehicleLength;
  std::vector<TrajectorySample> samples;
};

std::vector<PredictedTrajectory> predict_neighbors(const sim::WorldState& world, double horizon,
                                                   const SafetyConfig& cfg);

PredictedTrajectory predict_ego(const sim::WorldState& world, const sim::ManeuverPlan& plan,
                                double horizon, const SafetyConfig& cfg);

struct Conflict {
  int vehicle_id = 0;
  double time = 0.0;        // sample time of the violation, s from now
  double clearance = 0.0;   // |ds| - half lengths at that sample
  std::string describe() const;
};

struct Verdict {
  std::optional<Conflict> conflict;
  bool accepted() const { return !conflict.has_value(); }
};

// `plan` must be present exactly when `action` is a lane change. Keep-lane is always accepted.
Verdict check_action(const sim::WorldState& world, Action action,
                     const std::optional<sim::ManeuverPlan>& plan, const SafetyConfig& cfg);

}  // namespace lanechange::safety
