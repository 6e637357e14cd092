#pragma once

// Independent reference computations shared by the unit tests and the acceptance run.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "lanechange/dqn/agent.hpp"
#include "lanechange/dqn/network.hpp"
#include "lanechange/sim_core.hpp"
#include "lanechange/state_encoder.hpp"

namespace lanechange::oracle {

using dqn::ForwardCache;
using dqn::Parameters;
using dqn::Tensor;
using dqn::Transition;

inline encoding::StateTensor random_state(Rng& rng) {
  sim::SimConfig sc;
  sc.npc_count = 60 + static_cast<int>(uniform_index(rng, 120));
  sim::WorldState w = sim::spawn_world(sim::TrackConfig{}, sc, rng());
  w.ego().speed = uniform(rng, 0.0, 22.0);
  w.ego().lane = static_cast<int>(uniform_index(rng, 3));
  w.ego().s = uniform(rng, 0.0, w.track.lap_length);
  return encoding::encode(w, encoding::EncoderConfig{});
}

inline std::vector<Transition> random_batch(Rng& rng, std::size_t n) {
  std::vector<Transition> batch;
  for (std::size_t i = 0; i < n; ++i) {
    Transition t;
    t.state = random_state(rng);
    t.next_state = random_state(rng);
    t.action = *action_from_index(static_cast<int>(uniform_index(rng, 3)));
    t.reward = uniform(rng, -10.0, 1.5);
    t.terminal = uniform01(rng) < 0.2;
    batch.push_back(t);
  }
  return batch;
}

// Mean squared error written out directly from forward(), independent of the backward pass.
inline double reference_loss(const Parameters<double>& p, const std::vector<Transition>& batch,
                             const std::vector<double>& y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double q = dqn::forward(p, batch[i].state)[static_cast<std::size_t>(to_index(batch[i].action))];
    sum += (y[i] - q) * (y[i] - q);
  }
  return sum / static_cast<double>(batch.size());
}

// ReLU on/off pattern of every hidden unit for the whole batch.
inline std::vector<bool> relu_pattern(const Parameters<double>& p, const std::vector<Transition>& batch) {
  std::vector<ForwardCache<double>> caches(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) caches[i].load(batch[i].state);
  dqn::forward_batch<double>(p, caches);
  std::vector<bool> out;
  for (const auto& c : caches) {
    for (double v : c.conv1) out.push_back(v > 0);
    for (int k = 0; k < dqn::shape::kFlat; ++k) out.push_back(c.flat[static_cast<std::size_t>(k)] > 0);
    for (double v : c.hidden1) out.push_back(v > 0);
    for (double v : c.hidden2) out.push_back(v > 0);
  }
  return out;
}

struct GradCheckResult {
  int tested = 0;
  int skipped_kinks = 0;
  double max_rel_error = 0.0;
};

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-7});
  return std::abs(analytic - numeric) / scale;
}

// Central differences on `count` parameters spread over every tensor. A parameter
// whose perturbation flips a ReLU is replaced by another one from the same tensor.
inline GradCheckResult gradient_check(std::uint64_t seed, int count, std::size_t batch_size,
                                      double h = 1e-6) {
  Rng rng(seed);
  Parameters<double> p = dqn::init_parameters<double>(rng);
  // Non-zero biases so their gradients and kinks are exercised too.
  for (Tensor t : {Tensor::kConv1Bias, Tensor::kConv2Bias, Tensor::kDense1Bias, Tensor::kDense2Bias,
                   Tensor::kHeadBias})
    for (double& b : p.tensor(t)) b = uniform(rng, -0.1, 0.1);
  const std::vector<Transition> batch = random_batch(rng, batch_size);
  std::vector<double> y(batch_size);
  for (double& v : y) v = uniform(rng, -5.0, 5.0);

  Parameters<double> grads;
  dqn::loss_and_gradients<double>(p, batch, y, grads);
  const std::vector<bool> base_pattern = relu_pattern(p, batch);

  GradCheckResult res;
  const int per_tensor = (count + dqn::kTensorCount - 1) / dqn::kTensorCount;
  for (int ti = 0; ti < dqn::kTensorCount; ++ti) {
    const auto t = static_cast<Tensor>(ti);
    const std::size_t off = dqn::tensor_offset(t);
    const std::size_t size = dqn::kTensorSizes[static_cast<std::size_t>(ti)];
    int done = 0, attempts = 0;
    while (done < per_tensor && attempts < 50 * per_tensor) {
      ++attempts;
      const std::size_t idx = off + uniform_index(rng, size);
      const double w0 = p.values[idx];
      p.values[idx] = w0 + h;
      const bool kink_hi = relu_pattern(p, batch) != base_pattern;
      const double up = reference_loss(p, batch, y);
      p.values[idx] = w0 - h;
      const bool kink_lo = relu_pattern(p, batch) != base_pattern;
      const double down = reference_loss(p, batch, y);
      p.values[idx] = w0;
      if (kink_hi || kink_lo) {
        ++res.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2 * h);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(grads.values[idx], numeric));
      ++res.tested;
      ++done;
    }
  }
  return res;
}

// Two-state MDP embedded as distinct grids. Action 0 in A stays in A with 0.3,
// action 1 moves to B with 0; in B action 1 stays with 1, action 0 returns to A
// with 0. Action 2 mirrors action 0 with half a point less reward.
struct TabularMdp {
  static constexpr int kStates = 2;
  double gamma = 0.5;

  static encoding::StateTensor embed(int s) {
    encoding::StateTensor t;
    t.grid.fill(encoding::kEmptyCell);
    if (s == 1)
      for (int r = 0; r < encoding::kGridRows; ++r) t.at(r, 0) = -0.5f;
    t.aux = {s == 0 ? 0.2f : 0.8f, 1.0f, 1.0f};
    return t;
  }

  static std::pair<int, double> transition(int s, int a) {
    if (a == 1) return {1, s == 0 ? 0.0 : 1.0};
    const double r = s == 0 ? 0.3 : 0.0;
    return {0, a == 2 ? r - 0.5 : r};
  }

  // Value iteration to convergence; returns the optimal action per state.
  std::array<int, kStates> optimal_policy() const {
    std::array<double, kStates> v{};
    for (int it = 0; it < 2000; ++it) {
      std::array<double, kStates> next{};
      for (int s = 0; s < kStates; ++s) {
        double best = -1e18;
        for (int a = 0; a < kActionCount; ++a) {
          const auto [s2, r] = transition(s, a);
          best = std::max(best, r + gamma * v[static_cast<std::size_t>(s2)]);
        }
        next[static_cast<std::size_t>(s)] = best;
      }
      v = next;
    }
    std::array<int, kStates> pi{};
    for (int s = 0; s < kStates; ++s) {
      double best = -1e18;
      for (int a = 0; a < kActionCount; ++a) {
        const auto [s2, r] = transition(s, a);
        const double q = r + gamma * v[static_cast<std::size_t>(s2)];
        if (q > best + 1e-12) {
          best = q;
          pi[static_cast<std::size_t>(s)] = a;
        }
      }
    }
    return pi;
  }
};

// Trains a DqnAgent on the tabular MDP with epsilon-greedy exploration and
// returns its greedy action in each state.
inline std::array<int, TabularMdp::kStates> train_tabular(std::uint64_t seed, int steps) {
  const TabularMdp mdp;
  dqn::TrainConfig cfg;
  cfg.gamma = mdp.gamma;
  cfg.lr = 1e-3;
  cfg.batch_size = 16;
  cfg.buffer_capacity = 2000;
  cfg.target_sync_every = 50;
  cfg.eps0 = 1.0;
  cfg.eps_min = 0.2;
  cfg.eps_decay = 0.999;
  dqn::DqnAgent agent(cfg, seed);
  Rng env_rng(seed ^ 0x5eedULL);
  int s = 0;
  for (int k = 0; k < steps; ++k) {
    if (k % 20 == 0) s = static_cast<int>(uniform_index(env_rng, 2));
    const auto state = TabularMdp::embed(s);
    const Action a = agent.act(state);
    const auto [s2, r] = TabularMdp::transition(s, to_index(a));
    agent.decay_epsilon();
    agent.observe(Transition{state, a, r, TabularMdp::embed(s2), false});
    s = s2;
  }
  return {to_index(agent.greedy(TabularMdp::embed(0))), to_index(agent.greedy(TabularMdp::embed(1)))};
}

}  // namespace lanechange::oracle
