#include "lanechange/harness/runner.hpp"

#include <fstream>
#include <future>
#include <ostream>
#include <stdexcept>

namespace lanechange::harness {

std::uint64_t train_world_seed(std::uint64_t master, int episode_index) {
  return derive_seed(master, kTrainWorldStream, static_cast<std::uint64_t>(episode_index));
}

std::uint64_t eval_world_seed(std::uint64_t master, int episode_index) {
  return derive_seed(master, kEvalWorldStream, static_cast<std::uint64_t>(episode_index));
}

TrainOutcome train(const RunConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  std::filesystem::create_directories(opts.out_dir);
  if (!std::filesystem::is_directory(opts.out_dir))
    throw std::runtime_error("output directory " + opts.out_dir.string() + " is not usable");

  TrainOutcome outcome;
  outcome.metrics_csv = opts.out_dir / kMetricsFile;
  outcome.checkpoint = opts.out_dir / kCheckpointFile;

  int start = 0;
  std::optional<dqn::DqnAgent> agent;
  if (opts.resume) {
    const dqn::Checkpoint ckpt = dqn::load_checkpoint(*opts.resume);
    if (!ckpt.training)
      throw std::runtime_error("checkpoint " + opts.resume->string() + " has no training state");
    agent.emplace(dqn::DqnAgent::restore(ckpt));
    start = static_cast<int>(ckpt.training->episodes_completed);
  } else {
    agent.emplace(cfg.train, derive_seed(cfg.harness.seed, kAgentStream, 0));
  }

  {
    std::ofstream echo(opts.out_dir / "config.txt", std::ios::trunc);
    if (!echo) throw std::runtime_error("cannot write to " + opts.out_dir.string());
    echo << format_config(cfg);
  }

  // A resumed run keeps the rows already written by the episodes it replaces.
  std::ofstream csv;
  if (opts.resume && std::filesystem::exists(outcome.metrics_csv)) {
    const auto rows = read_metrics_csv(outcome.metrics_csv);
    csv.open(outcome.metrics_csv, std::ios::trunc);
    csv << metrics_csv_header() << '\n';
    for (const auto& r : rows) {
      if (r.phase != "train" || r.episode > start) continue;
      EpisodeMetrics m;
      m.episode = r.episode;
      m.lane_changes = r.lane_changes;
      m.collisions = r.collisions;
      m.avg_speed_mph = r.avg_speed_mph;
      m.distance_m = r.distance_m;
      m.discounted_return = r.discounted_return;
      m.eps_at_end = r.eps;
      csv << metrics_csv_row(m) << '\n';
    }
  } else {
    csv.open(outcome.metrics_csv, std::ios::trunc);
    csv << metrics_csv_header() << '\n';
  }
  if (!csv) throw std::runtime_error("cannot write " + outcome.metrics_csv.string());
  csv.flush();

  std::optional<TraceWriter> trace;
  if (opts.trace) {
    trace.emplace(opts.out_dir / "trace.jsonl", opts.resume.has_value());
    trace->set_record_steps(false);
  }

  for (int ep = start; ep < cfg.harness.episodes; ++ep) {
    EpisodeResult r = run_episode(cfg, train_world_seed(cfg.harness.seed, ep), *agent,
                                  Phase::kTrain, cfg.harness.filter,
                                  trace ? &*trace : nullptr, ep + 1);
    csv << metrics_csv_row(r.metrics) << '\n';
    csv.flush();
    if (opts.log) {
      *opts.log << "train episode " << ep + 1 << "/" << cfg.harness.episodes
                << " lane_changes=" << r.metrics.lane_changes
                << " collisions=" << r.metrics.collisions
                << " avg_speed_mph=" << r.metrics.avg_speed_mph
                << " return=" << r.metrics.discounted_return << " eps=" << agent->epsilon()
                << " grad_steps=" << agent->grad_steps() << '\n';
    }
    outcome.train.push_back(r.metrics);
    if ((ep + 1) % cfg.harness.checkpoint_every == 0)
      dqn::save_checkpoint(outcome.checkpoint, agent->snapshot(static_cast<std::uint64_t>(ep + 1)));
  }
  dqn::save_checkpoint(outcome.checkpoint,
                       agent->snapshot(static_cast<std::uint64_t>(
                           std::max(start, cfg.harness.episodes))));

  for (int k = 0; k < cfg.harness.eval_episodes; ++k) {
    EpisodeResult r = run_episode(cfg, eval_world_seed(cfg.harness.seed, k), *agent, Phase::kEval,
                                  cfg.harness.filter, trace ? &*trace : nullptr, k + 1);
    csv << metrics_csv_row(r.metrics) << '\n';
    csv.flush();
    if (opts.log)
      *opts.log << "eval episode " << k + 1 << "/" << cfg.harness.eval_episodes
                << " lane_changes=" << r.metrics.lane_changes
                << " collisions=" << r.metrics.collisions
                << " avg_speed_mph=" << r.metrics.avg_speed_mph << '\n';
    outcome.eval.push_back(r.metrics);
  }
  return outcome;
}

std::vector<EpisodeMetrics> evaluate_episodes(const RunConfig& cfg,
                                              const dqn::Parameters<float>& params,
                                              const EvalOptions& opts) {
  if (opts.episodes <= 0) throw std::invalid_argument("evaluate: need at least one episode");
  cfg.validate();
  std::vector<EpisodeMetrics> out(static_cast<std::size_t>(opts.episodes));

  if (opts.trace || opts.jobs <= 1) {
    std::optional<TraceWriter> trace;
    if (opts.trace) trace.emplace(*opts.trace);
    for (int k = 0; k < opts.episodes; ++k)
      out[k] = run_greedy_episode(cfg, eval_world_seed(opts.seed, k), params, opts.filter_on,
                                  trace ? &*trace : nullptr, k + 1)
                   .metrics;
    return out;
  }

  // Workers take strided episode indices and write into their own slots.
  std::vector<std::future<void>> workers;
  for (unsigned w = 0; w < opts.jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (int k = static_cast<int>(w); k < opts.episodes; k += static_cast<int>(opts.jobs))
        out[k] = run_greedy_episode(cfg, eval_world_seed(opts.seed, k), params, opts.filter_on,
                                    nullptr, k + 1)
                     .metrics;
    }));
  }
  for (auto& f : workers) f.get();
  return out;
}

RunSummary evaluate(const RunConfig& cfg, const dqn::Parameters<float>& params,
                    const EvalOptions& opts) {
  return summarize(evaluate_episodes(cfg, params, opts),
                   opts.filter_on ? Method::kRuleBasedDqn : Method::kDqn);
}

}  // namespace lanechange::harness
