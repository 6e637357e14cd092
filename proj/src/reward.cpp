#include "lanechange/reward.hpp"

#include <stdexcept>

namespace lanechange::reward {

void RewardConfig::validate() const {
  if (collision > 0 || illegal_change > 0 || invalid_change > 0 || lane_change_cost > 0)
    throw std::invalid_argument("reward: penalties must be <= 0");
  if (!(lambda > 0)) throw std::invalid_argument("reward: lambda must be positive");
}

Category DecisionOutcome::category() const {
  if (collision) return Category::kCollision;
  if (illegal_lane_change) return Category::kIllegalLaneChange;
  if (invalid_lane_change) return Category::kInvalidLaneChange;
  if (legal_lane_change) return Category::kLegalLaneChange;
  return Category::kNormalDrive;
}

double speed_reward(double avg_speed_mph, const RewardConfig& cfg) {
  return cfg.lambda * (avg_speed_mph - cfg.v_ref_mph);
}

double compute_reward(const DecisionOutcome& outcome, const RewardConfig& cfg) {
  switch (outcome.category()) {
    case Category::kCollision: return cfg.collision;
    case Category::kIllegalLaneChange: return cfg.illegal_change;
    case Category::kInvalidLaneChange: return cfg.invalid_change;
    case Category::kLegalLaneChange:
      return speed_reward(outcome.avg_speed_mph, cfg) + cfg.lane_change_cost;
    case Category::kNormalDrive: break;
  }
  return speed_reward(outcome.avg_speed_mph, cfg);
}

}  // namespace lanechange::reward
