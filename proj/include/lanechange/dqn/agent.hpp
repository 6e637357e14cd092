#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "lanechange/dqn/adam.hpp"
#include "lanechange/dqn/network.hpp"
#include "lanechange/dqn/policy.hpp"
#include "lanechange/dqn/replay_buffer.hpp"

namespace lanechange::dqn {

// Everything needed to resume training bit-exactly.
struct TrainingState {
  Parameters<float> target;
  AdamState<float> adam;
  double epsilon = 1.0;
  std::uint64_t grad_steps = 0;
  std::uint64_t episodes_completed = 0;
  std::string rng_state;
  std::vector<Transition> replay;  // oldest first

  bool operator==(const TrainingState&) const = default;
};

struct Checkpoint {
  TrainConfig config;
  Parameters<float> online;
  std::optional<TrainingState> training;

  bool operator==(const Checkpoint&) const = default;
};

// Online/target networks, Adam, replay and the exploration schedule.
class DqnAgent {
 public:
  DqnAgent(const TrainConfig& cfg, std::uint64_t seed);

  static DqnAgent restore(const Checkpoint& ckpt);
  Checkpoint snapshot(std::uint64_t episodes_completed) const;

  Action act(const encoding::StateTensor& state);
  Action greedy(const encoding::StateTensor& state) const;
  QValues q_values(const encoding::StateTensor& state) const;

  // Stores the transition and, once the buffer holds a batch, takes one gradient
  // step. Returns the loss of that step.
  std::optional<double> observe(Transition t);
  double train_step();
  void sync_target();
  void decay_epsilon();

  double epsilon() const { return epsilon_; }
  void set_epsilon(double eps) { epsilon_ = eps; }
  std::uint64_t grad_steps() const { return grad_steps_; }
  std::uint64_t target_syncs() const { return target_syncs_; }
  const TrainConfig& config() const { return cfg_; }
  const Parameters<float>& online() const { return online_; }
  const Parameters<float>& target() const { return target_; }
  const AdamState<float>& adam() const { return adam_; }
  const ReplayBuffer& replay() const { return replay_; }

 private:
  DqnAgent(const TrainConfig& cfg, Rng rng);

  TrainConfig cfg_;
  Rng rng_;
  Parameters<float> online_;
  Parameters<float> target_;
  Parameters<float> grads_;
  AdamState<float> adam_;
  ReplayBuffer replay_;
  double epsilon_;
  std::uint64_t grad_steps_ = 0;
  std::uint64_t target_syncs_ = 0;
};

}  // namespace lanechange::dqn
