#pragma once

// Line-delimited JSON episode traces. Three record kinds share one file:
//   {"type":"step", "episode", "t", "vehicles":[[id,s,d,lane,speed],...],
//    "collision":[a,b]|null, "lap_completed", "lane_change_completed"}
//   {"type":"decision", "episode", "t", "proposed", "verdict", "conflict_vehicle",
//    "conflict_time", "executed", "category", "reward"}
//   {"type":"episode_end", "episode", "phase", "crashed", "lane_changes",
//    "avg_speed_mph", "distance_m", "return"}

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "lanechange/action.hpp"
#include "lanechange/sim_core.hpp"

namespace lanechange {

enum class FilterVerdict {
  kNotChecked,  // keep-lane, or filter disabled
  kAccepted,
  kRejected,
  kIllegal,  // edge-lane request, forced to keep lane before the filter
};

std::string_view to_string(FilterVerdict v);

struct DecisionRecord {
  double time = 0.0;
  Action proposed = Action::kKeepLane;
  FilterVerdict verdict = FilterVerdict::kNotChecked;
  std::optional<int> conflict_vehicle;
  std::optional<double> conflict_time;
  Action executed = Action::kKeepLane;
  std::string category;
  double reward = 0.0;
};

struct EpisodeEndRecord {
  std::string phase;
  bool crashed = false;
  int lane_changes = 0;
  double avg_speed_mph = 0.0;
  double distance_m = 0.0;
  double discounted_return = 0.0;
};

std::string step_record(int episode, const sim::WorldState& world, const sim::StepEvents& events);
std::string decision_record(int episode, const DecisionRecord& d);
std::string episode_end_record(int episode, const EpisodeEndRecord& e);

class TraceWriter {
 public:
  // Appends when `append` is set, otherwise truncates.
  explicit TraceWriter(const std::filesystem::path& path, bool append = false);

  void step(int episode, const sim::WorldState& world, const sim::StepEvents& events);
  void decision(int episode, const DecisionRecord& d);
  void episode_end(int episode, const EpisodeEndRecord& e);
  // Steps are skipped when disabled; decisions and episode ends are always written.
  void set_record_steps(bool on) { record_steps_ = on; }

 private:
  std::ofstream out_;
  bool record_steps_ = true;
};

}  // namespace lanechange
