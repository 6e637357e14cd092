#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lanechange/dqn/checkpoint.hpp"
#include "lanechange/harness/config.hpp"
#include "lanechange/harness/episode.hpp"
#include "lanechange/harness/metrics.hpp"
#include "lanechange/harness/runner.hpp"

using namespace lanechange;
using namespace lanechange::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lanechange_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Short episodes so that whole training runs fit in a unit test.
RunConfig small_config() {
  RunConfig cfg;
  cfg.sim.max_episode_time = 40.0;
  cfg.sim.npc_count = 60;
  cfg.train.batch_size = 8;
  cfg.train.target_sync_every = 10;
  cfg.harness.episodes = 2;
  cfg.harness.eval_episodes = 0;
  cfg.harness.checkpoint_every = 1;
  return cfg;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace

TEST_CASE("config text round trip and errors") {
  const RunConfig defaults;
  CHECK(parse_config(format_config(defaults)) == defaults);
  CHECK(parse_config("") == defaults);

  const RunConfig c = parse_config(
      "# comment\n\nsim.npc_count = 42  # trailing\n  train.lr=0.001\nsafety.horizon = 3.5\n"
      "sim.npc_behavior = hold_speed\nharness.filter = false\n");
  CHECK(c.sim.npc_count == 42);
  CHECK(c.train.lr == 0.001);
  CHECK(c.safety.horizon == 3.5);
  CHECK(c.sim.npc_behavior == sim::NpcBehavior::kHoldSpeed);
  CHECK_FALSE(c.harness.filter);
  CHECK(parse_config(format_config(c)) == c);

  CHECK_THROWS_WITH_AS(parse_config("sim.npc_count = 3\nsim.bogus = 1\n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("sim.bogus = 1"), doctest::Contains("sim.bogus"), ConfigError);
  CHECK_THROWS_AS(parse_config("sim.npc_count = many"), ConfigError);
  CHECK_THROWS_AS(parse_config("sim.npc_count"), ConfigError);
  CHECK_THROWS_AS(parse_config("train.gamma = 1.5"), ConfigError);
  CHECK_THROWS_AS(parse_config("track.lane_count = 4"), ConfigError);
  CHECK(config_keys().size() >= 40u);

  const fs::path dir = scratch("config");
  std::ofstream(dir / "a.conf") << "reward.lambda = 0.05\n";
  CHECK(load_config(dir / "a.conf").reward.lambda == 0.05);
  CHECK_THROWS_AS(load_config(dir / "missing.conf"), ConfigError);
}

TEST_CASE("two-episode training run writes two rows and a checkpoint") {
  const fs::path dir = scratch("smoke");
  const TrainOutcome out = train(small_config(), TrainOptions{dir, std::nullopt, false, nullptr});
  const auto rows = read_metrics_csv(out.metrics_csv);
  REQUIRE(rows.size() == 2u);
  CHECK(rows[0].episode == 1);
  CHECK(rows[1].episode == 2);
  CHECK(rows[0].phase == "train");
  std::istringstream csv(slurp(out.metrics_csv));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "episode,phase,lane_changes,collisions,avg_speed_mph,distance_m,return,eps");
  CHECK(fs::exists(out.checkpoint));
  CHECK(fs::exists(dir / "config.txt"));
  CHECK(load_config(dir / "config.txt") == small_config());
  const dqn::Checkpoint ckpt = dqn::load_checkpoint(out.checkpoint);
  REQUIRE(ckpt.training);
  CHECK(ckpt.training->episodes_completed == 2u);
}

TEST_CASE("training is deterministic and resumes exactly") {
  RunConfig cfg = small_config();
  cfg.harness.episodes = 4;
  cfg.harness.eval_episodes = 2;

  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  train(cfg, TrainOptions{a, std::nullopt, false, nullptr});
  train(cfg, TrainOptions{b, std::nullopt, false, nullptr});
  CHECK(slurp(a / kMetricsFile) == slurp(b / kMetricsFile));
  CHECK(slurp(a / kCheckpointFile) == slurp(b / kCheckpointFile));

  // Stop after two episodes, then resume from the checkpoint to four.
  const fs::path c = scratch("resume");
  RunConfig first = cfg;
  first.harness.episodes = 2;
  first.harness.eval_episodes = 0;
  train(first, TrainOptions{c, std::nullopt, false, nullptr});
  const dqn::Checkpoint mid = dqn::load_checkpoint(c / kCheckpointFile);
  fs::copy_file(c / kCheckpointFile, c / "mid.bin");
  train(cfg, TrainOptions{c, c / "mid.bin", false, nullptr});
  CHECK(slurp(c / kMetricsFile) == slurp(a / kMetricsFile));
  CHECK(slurp(c / kCheckpointFile) == slurp(a / kCheckpointFile));

  // Epsilon and optimizer state came back from the checkpoint.
  const dqn::DqnAgent restored = dqn::DqnAgent::restore(mid);
  CHECK(restored.epsilon() == mid.training->epsilon);
  CHECK(restored.adam() == mid.training->adam);
  CHECK(restored.epsilon() < 1.0);
}

TEST_CASE("episodes are reproducible and their return is self-consistent") {
  RunConfig cfg = small_config();
  dqn::DqnAgent agent(cfg.train, 5);
  const auto r1 = run_episode(cfg, 77, agent, Phase::kEval, true);
  const auto r2 = run_episode(cfg, 77, agent, Phase::kEval, true);
  CHECK(r1.metrics == r2.metrics);
  CHECK(r1.transitions == r2.transitions);

  dqn::DqnAgent learner(cfg.train, 6);
  const auto t = run_episode(cfg, 78, learner, Phase::kTrain, true);
  double g = 0.0;
  for (std::size_t k = t.rewards.size(); k-- > 0;) g = t.rewards[k] + cfg.train.gamma * g;
  CHECK(t.metrics.discounted_return == doctest::Approx(g).epsilon(1e-12));
  CHECK(t.rewards.size() == static_cast<std::size_t>(t.metrics.decisions));
  for (double r : t.rewards) {
    CHECK(r >= -10.0);
    CHECK(r <= 1.5);
  }
  CHECK(t.metrics.collisions <= 1);
  CHECK(t.metrics.avg_speed_mph >= 0.0);
}

TEST_CASE("target network re-syncs every target_sync_every gradient steps") {
  RunConfig cfg = small_config();
  dqn::DqnAgent agent(cfg.train, 9);
  int decisions = 0;
  for (int ep = 0; ep < 3; ++ep)
    decisions += run_episode(cfg, train_world_seed(1, ep), agent, Phase::kTrain, true).metrics.decisions;
  // One gradient step per decision once the replay holds a batch.
  const int expected_steps = std::max(0, decisions - static_cast<int>(cfg.train.batch_size) + 1);
  CHECK(agent.grad_steps() == static_cast<std::uint64_t>(expected_steps));
  CHECK(agent.target_syncs() == static_cast<std::uint64_t>(expected_steps) / cfg.train.target_sync_every);
  CHECK(agent.epsilon() == doctest::Approx(std::pow(cfg.train.eps_decay, decisions)));
}

TEST_CASE("evaluation summaries") {
  RunConfig cfg = small_config();
  dqn::DqnAgent agent(cfg.train, 3);
  CHECK_THROWS(evaluate_episodes(cfg, agent.online(), EvalOptions{0, true, 1, 1, std::nullopt}));
  CHECK_THROWS(summarize({}, Method::kDqn));

  std::vector<EpisodeMetrics> clean(4);
  for (auto& m : clean) m.avg_speed_mph = 40.0;
  clean[1].lane_changes = 4;
  const RunSummary s = summarize(clean, Method::kRuleBasedDqn);
  CHECK(s.safety_rate == 1.0);
  CHECK(s.avg_lane_changes == 1.0);
  CHECK(s.avg_speed_mph == 40.0);
  clean[2].collisions = 1;
  CHECK(summarize(clean, Method::kDqn).safety_rate == 0.75);

  // Parallel evaluation merges in episode order and matches the serial run.
  const auto serial = evaluate_episodes(cfg, agent.online(), EvalOptions{4, true, 2, 1, std::nullopt});
  const auto parallel = evaluate_episodes(cfg, agent.online(), EvalOptions{4, true, 2, 3, std::nullopt});
  CHECK(serial == parallel);
  for (int k = 0; k < 4; ++k) CHECK(serial[static_cast<std::size_t>(k)].episode == k + 1);
}

TEST_CASE("safety rate recomputed from the trace matches the summary") {
  // Dense traffic, no filter and an untrained network: some episodes crash.
  RunConfig cfg = small_config();
  cfg.sim.npc_count = 400;
  cfg.sim.max_episode_time = 60.0;
  const fs::path dir = scratch("trace");
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    dqn::DqnAgent agent(cfg.train, seed);
    const EvalOptions opts{6, false, seed, 1, dir / "trace.jsonl"};
    const auto episodes = evaluate_episodes(cfg, agent.online(), opts);
    const RunSummary s = summarize(episodes, Method::kDqn);

    int ends = 0, crashed = 0;
    for (const auto& rec : read_jsonl(dir / "trace.jsonl")) {
      if (rec["type"] == "decision") {
        CHECK(rec.contains("proposed"));
        CHECK(rec.contains("verdict"));
        CHECK(rec.contains("executed"));
      }
      if (rec["type"] != "episode_end") continue;
      ++ends;
      crashed += rec["crashed"].get<bool>();
    }
    CHECK(ends == 6);
    CHECK(s.safety_rate == doctest::Approx(1.0 - crashed / 6.0));
  }
}

TEST_CASE("filtered lane changes never end in a collision when traffic holds its speed") {
  RunConfig cfg = small_config();
  cfg.sim.npc_count = 250;
  cfg.sim.npc_behavior = sim::NpcBehavior::kHoldSpeed;
  cfg.sim.npc_speed_min = cfg.sim.npc_speed_max = 16.0;
  cfg.sim.max_episode_time = 120.0;
  const fs::path dir = scratch("sound");
  int executed = 0;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    Rng rng(seed);
    {
      TraceWriter trace(dir / "t.jsonl");
      trace.set_record_steps(false);
      play_episode(
          cfg, seed, Phase::kEval, true,
          [&](const encoding::StateTensor&) { return *action_from_index(static_cast<int>(uniform_index(rng, 3))); },
          nullptr, &trace, 1, 1.0);
    }
    for (const auto& rec : read_jsonl(dir / "t.jsonl")) {
      if (rec["type"] != "decision" || rec["executed"] == 0) continue;
      ++executed;
      CHECK(rec["category"] != "collision");
    }
  }
  CHECK(executed > 20);
}

TEST_CASE("free road: a briefly trained agent keeps its lane near the limit") {
  RunConfig cfg;
  cfg.sim.npc_count = 0;
  cfg.sim.max_episode_time = 120.0;
  cfg.train.batch_size = 16;
  cfg.train.eps_decay = 0.99;
  cfg.train.lr = 1e-3;
  dqn::DqnAgent agent(cfg.train, 1);
  for (int ep = 0; ep < 8; ++ep) run_episode(cfg, train_world_seed(1, ep), agent, Phase::kTrain, true);
  for (int k = 0; k < 3; ++k) {
    const auto r = run_episode(cfg, eval_world_seed(1, k), agent, Phase::kEval, true);
    CHECK(r.metrics.collisions == 0);
    CHECK(r.metrics.lane_changes <= 1);
    CHECK(r.metrics.avg_speed_mph >= 0.9 * sim::mps_to_mph(cfg.track.speed_limit));
  }
}

TEST_CASE("metrics CSV parsing and plot data") {
  std::string csv = metrics_csv_header() + "\n";
  for (int k = 1; k <= 10; ++k) {
    EpisodeMetrics m;
    m.episode = k;
    m.lane_changes = 2 * k;
    csv += metrics_csv_row(m) + "\n";
  }
  for (int k = 1; k <= 3; ++k) {
    EpisodeMetrics m;
    m.episode = k;
    m.phase = Phase::kEval;
    m.lane_changes = k;
    csv += metrics_csv_row(m) + "\n";
  }
  const auto rows = parse_metrics_csv(csv);
  REQUIRE(rows.size() == 13u);
  const PlotSeries series = lane_change_series(rows);
  REQUIRE(series.train.size() == 10u);
  REQUIRE(series.eval.size() == 3u);
  CHECK(series.train[4] == std::pair{5, 10});
  CHECK(series.eval[2] == std::pair{3, 3});

  const fs::path dir = scratch("plot");
  std::ofstream(dir / "m.csv") << csv;
  std::ostringstream warn;
  const PlotOutput out = emit_plot_data(dir / "m.csv", dir / "plots", warn);
  CHECK_FALSE(out.empty);
  CHECK(warn.str().empty());
  int train_points = 0;
  std::ifstream tf(out.train_file);
  for (std::string line; std::getline(tf, line);) train_points += !line.empty() && line[0] != '#';
  CHECK(train_points == 10);
  CHECK(fs::exists(out.eval_file));

  std::ofstream(dir / "empty.csv") << metrics_csv_header() << "\n";
  std::ostringstream warn2;
  const PlotOutput empty = emit_plot_data(dir / "empty.csv", dir / "plots2", warn2);
  CHECK(empty.empty);
  CHECK(empty.series.train.empty());
  CHECK_FALSE(warn2.str().empty());

  const std::string broken = metrics_csv_header() + "\n" + metrics_csv_row(EpisodeMetrics{}) + "\n1,train,x\n";
  CHECK_THROWS_WITH_AS(parse_metrics_csv(broken), doctest::Contains("line 3"), MetricsFormatError);
  CHECK_THROWS_AS(parse_metrics_csv("not,a,header\n"), MetricsFormatError);
}
