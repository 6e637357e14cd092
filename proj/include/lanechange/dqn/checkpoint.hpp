#pragma once

// Binary checkpoint, little-endian throughout:
//   "LCDQ" | u32 version | u32 x 8 architecture dims | u64 parameter count
//   | TrainConfig echo | online parameters (f32, declaration order)
//   | u8 has_training_state [| target f32 | adam m f32 | adam v f32 | u64 adam step
//   | f64 epsilon | u64 grad steps | u64 episodes | u32 len + RNG text
//   | u64 count + replay transitions]

#include <filesystem>
#include <stdexcept>

#include "lanechange/dqn/agent.hpp"

namespace lanechange::dqn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lanechange::dqn
