#include "lanechange/dqn/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace lanechange::dqn {

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("train: gamma must be in (0, 1]");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  if (batch_size == 0 || buffer_capacity == 0 || target_sync_every == 0)
    throw std::invalid_argument("train: batch_size, buffer_capacity, target_sync_every must be positive");
  if (batch_size > buffer_capacity)
    throw std::invalid_argument("train: batch_size cannot exceed buffer_capacity");
  if (!(eps0 > 0.0 && eps0 <= 1.0) || !(eps_min > 0.0) || eps_min > eps0)
    throw std::invalid_argument("train: need 0 < eps_min <= eps0 <= 1");
  if (!(eps_decay > 0.0 && eps_decay <= 1.0))
    throw std::invalid_argument("train: eps_decay must be in (0, 1]");
}

Action greedy_action(const QValues& q) {
  int best = 0;
  for (int a = 1; a < kActionCount; ++a)
    if (q[a] > q[best]) best = a;
  return static_cast<Action>(best);
}

Action select_action(const QValues& q, double eps, LaneFlags /*lanes*/, Rng& rng) {
  if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("select_action: eps must be in [0, 1]");
  if (eps > 0.0 && uniform01(rng) < eps)
    return static_cast<Action>(uniform_index(rng, kActionCount));
  return greedy_action(q);
}

double decay_eps(double eps, const TrainConfig& cfg) {
  return std::max(cfg.eps_min, eps * cfg.eps_decay);
}

}  // namespace lanechange::dqn
