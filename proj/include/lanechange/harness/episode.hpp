#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "lanechange/dqn/agent.hpp"
#include "lanechange/harness/config.hpp"
#include "lanechange/trace.hpp"

namespace lanechange::harness {

enum class Phase { kTrain, kEval };
std::string_view to_string(Phase p);

struct EpisodeMetrics {
  int episode = 0;  // 1-based within its phase
  Phase phase = Phase::kTrain;
  int lane_changes = 0;  // executed lane changes
  int collisions = 0;    // 0 or 1, the episode stops at the first one
  double avg_speed_mph = 0.0;
  double distance_m = 0.0;
  double discounted_return = 0.0;
  std::uint64_t wall_steps = 0;
  double eps_at_end = 0.0;

  // Diagnostics, not part of the metrics CSV.
  int decisions = 0;
  int rejected = 0;
  int illegal = 0;
  bool lap_completed = false;

  bool operator==(const EpisodeMetrics&) const = default;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<dqn::Transition> transitions;
  std::vector<double> rewards;  // one per decision, in order
};

// Plays one episode from a freshly spawned world. Train mode explores with the
// agent's epsilon, stores transitions, takes one gradient step per decision
// once the replay holds a batch, and decays epsilon per decision. Eval mode is
// greedy and leaves the agent untouched.
EpisodeResult run_episode(const RunConfig& cfg, std::uint64_t world_seed, dqn::DqnAgent& agent,
                          Phase mode, bool filter_on, TraceWriter* trace = nullptr,
                          int episode = 1);

// Greedy episode driven by a read-only parameter snapshot; safe to run concurrently.
EpisodeResult run_greedy_episode(const RunConfig& cfg, std::uint64_t world_seed,
                                 const dqn::Parameters<float>& params, bool filter_on,
                                 TraceWriter* trace = nullptr, int episode = 1);

// Generic driver used by both entry points.
using ChooseAction = std::function<Action(const encoding::StateTensor&)>;
using Learn = std::function<void(dqn::Transition&&)>;
EpisodeResult play_episode(const RunConfig& cfg, std::uint64_t world_seed, Phase phase,
                           bool filter_on, const ChooseAction& choose, const Learn& learn,
                           TraceWriter* trace, int episode, double eps_for_metrics);

}  // namespace lanechange::harness
