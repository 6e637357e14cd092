#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lanechange/dqn/checkpoint.hpp"
#include "lanechange/harness/config.hpp"
#include "lanechange/harness/episode.hpp"
#include "lanechange/harness/metrics.hpp"

namespace lanechange::harness {

// Seed streams derived from the master seed.
inline constexpr std::uint64_t kAgentStream = 0;
inline constexpr std::uint64_t kTrainWorldStream = 1;
inline constexpr std::uint64_t kEvalWorldStream = 2;

std::uint64_t train_world_seed(std::uint64_t master, int episode_index);
std::uint64_t eval_world_seed(std::uint64_t master, int episode_index);

struct TrainOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;  // checkpoint with training state
  bool trace = false;                           // write out_dir/trace.jsonl
  std::ostream* log = nullptr;
};

struct TrainOutcome {
  std::vector<EpisodeMetrics> train;
  std::vector<EpisodeMetrics> eval;
  std::filesystem::path metrics_csv;
  std::filesystem::path checkpoint;
};

inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";

// Trains for cfg.harness.episodes (resuming if asked), appending one CSV row per
// episode, checkpointing every checkpoint_every episodes and at the end, then runs
// cfg.harness.eval_episodes greedy episodes recorded with phase "eval".
TrainOutcome train(const RunConfig& cfg, const TrainOptions& opts);

struct EvalOptions {
  int episodes = 10;
  bool filter_on = true;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::optional<std::filesystem::path> trace;  // forces jobs = 1
};

// Greedy episodes on eval seeds 0..n-1, merged by episode index.
std::vector<EpisodeMetrics> evaluate_episodes(const RunConfig& cfg,
                                              const dqn::Parameters<float>& params,
                                              const EvalOptions& opts);

RunSummary evaluate(const RunConfig& cfg, const dqn::Parameters<float>& params,
                    const EvalOptions& opts);

}  // namespace lanechange::harness
