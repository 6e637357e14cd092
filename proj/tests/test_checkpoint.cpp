#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lanechange/dqn/checkpoint.hpp"
#include "oracles.hpp"

using namespace lanechange;
using namespace lanechange::dqn;

namespace {

DqnAgent trained_agent() {
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.buffer_capacity = 16;
  cfg.target_sync_every = 3;
  DqnAgent agent(cfg, 17);
  Rng rng(2);
  for (const auto& t : oracle::random_batch(rng, 20)) {
    agent.observe(t);
    agent.decay_epsilon();
  }
  return agent;
}

void put_u32(std::string& bytes, std::size_t offset, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes[offset + static_cast<std::size_t>(i)] = static_cast<char>(v >> (8 * i));
}

}  // namespace

TEST_CASE("checkpoint round trip preserves everything") {
  const DqnAgent agent = trained_agent();
  const Checkpoint ckpt = agent.snapshot(7);
  const std::string bytes = serialize_checkpoint(ckpt);
  CHECK(bytes.substr(0, 4) == "LCDQ");
  const Checkpoint back = deserialize_checkpoint(bytes);
  CHECK(back == ckpt);
  CHECK(back.training->episodes_completed == 7u);
  CHECK(back.training->replay.size() == 16u);

  // The restored agent continues exactly like the original.
  DqnAgent a = agent;
  DqnAgent b = DqnAgent::restore(back);
  CHECK(b.epsilon() == a.epsilon());
  CHECK(b.grad_steps() == a.grad_steps());
  for (int k = 0; k < 5; ++k) CHECK(a.train_step() == b.train_step());
  CHECK(a.online() == b.online());
  CHECK(a.adam() == b.adam());

  Rng rng(4);
  const auto s = oracle::random_state(rng);
  CHECK(a.act(s) == b.act(s));
}

TEST_CASE("checkpoint file save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "lanechange_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "c.bin";
  const Checkpoint ckpt = trained_agent().snapshot(1);
  save_checkpoint(path, ckpt);
  CHECK(load_checkpoint(path) == ckpt);

  Checkpoint weights_only{ckpt.config, ckpt.online, std::nullopt};
  save_checkpoint(path, weights_only);
  CHECK(load_checkpoint(path) == weights_only);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), CheckpointError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string good = serialize_checkpoint(trained_agent().snapshot(1));

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(bad_magic), CheckpointError);

  std::string bad_version = good;
  put_u32(bad_version, 4, 99);
  CHECK_THROWS_AS(deserialize_checkpoint(bad_version), CheckpointError);

  // Hidden layer width recorded as 256 instead of 128.
  std::string bad_dims = good;
  put_u32(bad_dims, 8 + 5 * 4, 256);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bad_dims), doctest::Contains("architecture"),
                       CheckpointError);

  for (std::size_t cut : {std::size_t{3}, std::size_t{40}, good.size() / 2, good.size() - 1})
    CHECK_THROWS_AS(deserialize_checkpoint(good.substr(0, cut)), CheckpointError);

  CHECK_THROWS_AS(deserialize_checkpoint(good + "x"), CheckpointError);
}
