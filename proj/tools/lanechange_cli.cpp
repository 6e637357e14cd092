// Command-line front end: train, eval, plot.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "lanechange/dqn/checkpoint.hpp"
#include "lanechange/harness/config.hpp"
#include "lanechange/harness/metrics.hpp"
#include "lanechange/harness/runner.hpp"

namespace lh = lanechange::harness;

int main(int argc, char** argv) {
  CLI::App app{"Highway lane-change DQN with a rule-based safety filter"};
  app.require_subcommand(1);

  std::string train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> train_episodes;
  std::optional<std::string> resume;
  bool train_no_filter = false;
  bool train_trace = false;
  auto* train = app.add_subcommand("train", "Train the agent and write metrics + checkpoint");
  train->add_option("--config", train_config, "Config file (key = value)")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--seed", train_seed, "Master seed (overrides harness.seed)");
  train->add_option("--episodes", train_episodes, "Training episodes (overrides harness.episodes)");
  train->add_option("--resume", resume, "Resume from a checkpoint with training state");
  train->add_flag("--no-filter", train_no_filter, "Train without the safety filter");
  train->add_flag("--trace", train_trace, "Write decision records to <out>/trace.jsonl");

  std::string checkpoint;
  int eval_episodes = 10;
  bool eval_no_filter = false;
  std::uint64_t eval_seed = 1;
  std::optional<std::string> eval_config, eval_trace, eval_csv;
  unsigned jobs = 1;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "Number of episodes")->required();
  eval->add_flag("--no-filter", eval_no_filter, "Disable the safety filter (plain DQN)");
  eval->add_option("--seed", eval_seed, "Master seed for evaluation worlds");
  eval->add_option("--config", eval_config, "Config file for sim/encoder/reward/safety settings");
  eval->add_option("--trace", eval_trace, "Write a full step/decision trace (JSONL)");
  eval->add_option("--csv", eval_csv, "Write per-episode metrics CSV");
  eval->add_option("--jobs", jobs, "Parallel evaluation workers");

  std::string plot_metrics, plot_out;
  auto* plot = app.add_subcommand("plot", "Split a metrics CSV into lane-change series");
  plot->add_option("--metrics", plot_metrics, "metrics.csv from train")->required();
  plot->add_option("--out", plot_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      lh::RunConfig cfg = lh::load_config(train_config);
      if (train_seed) cfg.harness.seed = *train_seed;
      if (train_episodes) cfg.harness.episodes = *train_episodes;
      if (train_no_filter) cfg.harness.filter = false;
      lh::TrainOptions opts;
      opts.out_dir = train_out;
      if (resume) opts.resume = *resume;
      opts.trace = train_trace;
      opts.log = &std::cerr;
      const auto outcome = lh::train(cfg, opts);
      std::cout << "metrics: " << outcome.metrics_csv.string() << '\n'
                << "checkpoint: " << outcome.checkpoint.string() << '\n';
      if (!outcome.eval.empty())
        std::cout << lh::format_summary(lh::summarize(
                         outcome.eval, cfg.harness.filter ? lh::Method::kRuleBasedDqn
                                                          : lh::Method::kDqn))
                  << '\n';
    } else if (*eval) {
      lh::RunConfig cfg = eval_config ? lh::load_config(*eval_config) : lh::RunConfig{};
      const auto ckpt = lanechange::dqn::load_checkpoint(checkpoint);
      lh::EvalOptions opts;
      opts.episodes = eval_episodes;
      opts.filter_on = !eval_no_filter;
      opts.seed = eval_seed;
      opts.jobs = jobs;
      if (eval_trace) opts.trace = *eval_trace;
      const auto episodes = lh::evaluate_episodes(cfg, ckpt.online, opts);
      if (eval_csv) {
        std::ofstream out(*eval_csv, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + *eval_csv);
        out << lh::metrics_csv_header() << '\n';
        for (const auto& m : episodes) out << lh::metrics_csv_row(m) << '\n';
      }
      std::cout << lh::format_summary(lh::summarize(
                       episodes, opts.filter_on ? lh::Method::kRuleBasedDqn : lh::Method::kDqn))
                << '\n';
    } else if (*plot) {
      const auto out = lh::emit_plot_data(plot_metrics, plot_out, std::cerr);
      std::cout << "train series: " << out.series.train.size() << " points -> "
                << out.train_file.string() << '\n'
                << "eval series: " << out.series.eval.size() << " points -> "
                << out.eval_file.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
