#include "lanechange/trace.hpp"

#include <stdexcept>

#include "json.hpp"

namespace lanechange {

using nlohmann::json;

std::string_view to_string(FilterVerdict v) {
  switch (v) {
    case FilterVerdict::kNotChecked: return "not_checked";
    case FilterVerdict::kAccepted: return "accepted";
    case FilterVerdict::kRejected: return "rejected";
    case FilterVerdict::kIllegal: return "illegal";
  }
  return "?";
}

std::string step_record(int episode, const sim::WorldState& world, const sim::StepEvents& events) {
  json vehicles = json::array();
  for (const auto& v : world.vehicles) vehicles.push_back({v.id, v.s, v.d, v.lane, v.speed});
  json j = {{"type", "step"},
            {"episode", episode},
            {"t", world.time},
            {"vehicles", std::move(vehicles)},
            {"collision", nullptr},
            {"lap_completed", events.lap_completed},
            {"lane_change_completed", events.lane_change_completed}};
  if (events.collision) j["collision"] = {events.collision->first, events.collision->second};
  return j.dump();
}

std::string decision_record(int episode, const DecisionRecord& d) {
  json j = {{"type", "decision"},
            {"episode", episode},
            {"t", d.time},
            {"proposed", to_index(d.proposed)},
            {"verdict", to_string(d.verdict)},
            {"conflict_vehicle", nullptr},
            {"conflict_time", nullptr},
            {"executed", to_index(d.executed)},
            {"category", d.category},
            {"reward", d.reward}};
  if (d.conflict_vehicle) j["conflict_vehicle"] = *d.conflict_vehicle;
  if (d.conflict_time) j["conflict_time"] = *d.conflict_time;
  return j.dump();
}

std::string episode_end_record(int episode, const EpisodeEndRecord& e) {
  return json{{"type", "episode_end"},
              {"episode", episode},
              {"phase", e.phase},
              {"crashed", e.crashed},
              {"lane_changes", e.lane_changes},
              {"avg_speed_mph", e.avg_speed_mph},
              {"distance_m", e.distance_m},
              {"return", e.discounted_return}}
      .dump();
}

TraceWriter::TraceWriter(const std::filesystem::path& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open trace file " + path.string());
}

void TraceWriter::step(int episode, const sim::WorldState& world, const sim::StepEvents& events) {
  if (record_steps_) out_ << step_record(episode, world, events) << '\n';
}

void TraceWriter::decision(int episode, const DecisionRecord& d) {
  out_ << decision_record(episode, d) << '\n';
}

void TraceWriter::episode_end(int episode, const EpisodeEndRecord& e) {
  out_ << episode_end_record(episode, e) << '\n';
  out_.flush();
}

}  // namespace lanechange
