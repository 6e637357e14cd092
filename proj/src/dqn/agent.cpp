#include "lanechange/dqn/agent.hpp"

#include <sstream>
#include <stdexcept>

namespace lanechange::dqn {

DqnAgent::DqnAgent(const TrainConfig& cfg, Rng rng)
    : cfg_(cfg), rng_(std::move(rng)), replay_(cfg.buffer_capacity), epsilon_(cfg.eps0) {
  cfg_.validate();
}

DqnAgent::DqnAgent(const TrainConfig& cfg, std::uint64_t seed) : DqnAgent(cfg, Rng(seed)) {
  online_ = init_parameters<float>(rng_);
  target_ = online_;
}

DqnAgent DqnAgent::restore(const Checkpoint& ckpt) {
  DqnAgent agent(ckpt.config, Rng());
  agent.online_ = ckpt.online;
  agent.target_ = ckpt.online;
  if (!ckpt.training) return agent;

  const TrainingState& st = *ckpt.training;
  agent.target_ = st.target;
  agent.adam_ = st.adam;
  agent.epsilon_ = st.epsilon;
  agent.grad_steps_ = st.grad_steps;
  agent.target_syncs_ = st.grad_steps / ckpt.config.target_sync_every;
  std::istringstream is(st.rng_state);
  is >> agent.rng_;
  if (!is) throw std::runtime_error("checkpoint: corrupt RNG state");
  for (const auto& t : st.replay) agent.replay_.push(t);
  return agent;
}

Checkpoint DqnAgent::snapshot(std::uint64_t episodes_completed) const {
  Checkpoint ckpt{cfg_, online_, TrainingState{}};
  TrainingState& st = *ckpt.training;
  st.target = target_;
  st.adam = adam_;
  st.epsilon = epsilon_;
  st.grad_steps = grad_steps_;
  st.episodes_completed = episodes_completed;
  std::ostringstream os;
  os << rng_;
  st.rng_state = os.str();
  st.replay = replay_.chronological();
  return ckpt;
}

QValues DqnAgent::q_values(const encoding::StateTensor& state) const {
  return forward(online_, state);
}

Action DqnAgent::act(const encoding::StateTensor& state) {
  const auto& aux = state.aux;
  return select_action(q_values(state), epsilon_, LaneFlags{aux[1] > 0.5f, aux[2] > 0.5f}, rng_);
}

Action DqnAgent::greedy(const encoding::StateTensor& state) const {
  return greedy_action(q_values(state));
}

std::optional<double> DqnAgent::observe(Transition t) {
  replay_.push(std::move(t));
  if (replay_.size() < cfg_.batch_size) return std::nullopt;
  return train_step();
}

double DqnAgent::train_step() {
  const std::vector<Transition> batch = replay_.sample(cfg_.batch_size, rng_);
  const std::vector<float> y = td_targets<float>(batch, target_, cfg_.gamma);
  const float loss = loss_and_gradients<float>(online_, batch, y, grads_);
  adam_step(online_, grads_, adam_, cfg_.lr);
  ++grad_steps_;
  if (grad_steps_ % cfg_.target_sync_every == 0) sync_target();
  return loss;
}

void DqnAgent::sync_target() {
  target_ = online_;
  ++target_syncs_;
}

void DqnAgent::decay_epsilon() { epsilon_ = decay_eps(epsilon_, cfg_); }

}  // namespace lanechange::dqn
