#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lanechange/dqn/policy.hpp"
#include "lanechange/reward.hpp"
#include "lanechange/safety_filter.hpp"
#include "lanechange/sim_core.hpp"
#include "lanechange/state_encoder.hpp"

namespace lanechange::harness {

struct HarnessConfig {
  int episodes = 100;
  int eval_episodes = 10;
  int checkpoint_every = 10;
  std::uint64_t seed = 1;
  bool filter = true;
  double keep_lane_period = 1.0;    // s, decision period when no lane change is executed
  double invalid_lookahead = 40.0;  // m, a lane change with no car this close ahead is "invalid"

  bool operator==(const HarnessConfig&) const = default;
};

struct RunConfig {
  sim::TrackConfig track;
  sim::SimConfig sim;
  encoding::EncoderConfig encoder;
  reward::RewardConfig reward;
  safety::SafetyConfig safety;
  dqn::TrainConfig train;
  HarnessConfig harness;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat "section.key = value" text; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Every key with its current value, in a form parse_config accepts.
std::string format_config(const RunConfig& cfg);
std::vector<std::string> config_keys();

}  // namespace lanechange::harness
