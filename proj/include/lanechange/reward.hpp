#pragma once

namespace lanechange::reward {

struct RewardConfig {
  double collision = -10.0;        // r_co
  double illegal_change = -5.0;    // r_ch1: lane change off the road edge
  double invalid_change = -3.0;    // r_ch2: lane change with a clear lane ahead
  double lane_change_cost = -1.0;  // r_ch3: added to the speed reward of a legal change
  double lambda = 0.04;            // per MPH
  double v_ref_mph = 25.0;

  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

enum class Category {
  kCollision,
  kIllegalLaneChange,
  kInvalidLaneChange,
  kLegalLaneChange,
  kNormalDrive,
};

// What happened during one decision period. Several flags may be set; the
// category is resolved by precedence collision > illegal > invalid > legal > normal.
struct DecisionOutcome {
  bool collision = false;
  bool illegal_lane_change = false;
  bool invalid_lane_change = false;
  bool legal_lane_change = false;
  double avg_speed_mph = 0.0;

  Category category() const;
};

double speed_reward(double avg_speed_mph, const RewardConfig& cfg);
double compute_reward(const DecisionOutcome& outcome, const RewardConfig& cfg);

}  // namespace lanechange::reward
