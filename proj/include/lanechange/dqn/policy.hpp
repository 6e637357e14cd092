#pragma once

#include <array>
#include <cstdint>

#include "lanechange/action.hpp"
#include "lanechange/dqn/network.hpp"
#include "lanechange/random.hpp"

namespace lanechange::dqn {

struct TrainConfig {
  double gamma = 0.95;
  double lr = 1e-4;
  std::uint32_t batch_size = 32;
  std::uint32_t buffer_capacity = 10000;
  std::uint32_t target_sync_every = 100;  // gradient steps
  double eps0 = 1.0;
  double eps_decay = 0.99985;  // per decision step
  double eps_min = 0.03;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct LaneFlags {
  bool left_exists = true;
  bool right_exists = true;
};

// Lowest index wins ties.
Action greedy_action(const QValues& q);

// Epsilon-greedy. Lane flags are informational only: edge-lane requests are
// penalized by the reward, never masked here.
Action select_action(const QValues& q, double eps, LaneFlags lanes, Rng& rng);

double decay_eps(double eps, const TrainConfig& cfg);

}  // namespace lanechange::dqn
