#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "lanechange/harness/episode.hpp"

namespace lanechange::harness {

// Columns: episode, phase, lane_changes, collisions, avg_speed_mph, distance_m, return, eps
std::string metrics_csv_header();
std::string metrics_csv_row(const EpisodeMetrics& m);

struct MetricsRow {
  int episode = 0;
  std::string phase;
  int lane_changes = 0;
  int collisions = 0;
  double avg_speed_mph = 0.0;
  double distance_m = 0.0;
  double discounted_return = 0.0;
  double eps = 0.0;
};

class MetricsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<MetricsRow> parse_metrics_csv(const std::string& text);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

enum class Method { kDqn, kRuleBasedDqn };
std::string_view to_string(Method m);

struct RunSummary {
  Method method = Method::kRuleBasedDqn;
  int episodes = 0;
  double avg_speed_mph = 0.0;
  double avg_lane_changes = 0.0;
  double safety_rate = 0.0;  // crash-free episodes / episodes
};

RunSummary summarize(const std::vector<EpisodeMetrics>& episodes, Method method);
std::string format_summary(const RunSummary& s);

struct PlotSeries {
  std::vector<std::pair<int, int>> train;  // (episode, lane changes)
  std::vector<std::pair<int, int>> eval;
};

PlotSeries lane_change_series(const std::vector<MetricsRow>& rows);

struct PlotOutput {
  PlotSeries series;
  std::filesystem::path train_file;
  std::filesystem::path eval_file;
  bool empty = false;
};

// Writes train_lane_changes.dat and eval_lane_changes.dat ("episode lane_changes"
// per line, '#' header) into out_dir. Warns on `warn` when the CSV has no rows.
PlotOutput emit_plot_data(const std::filesystem::path& metrics_csv,
                          const std::filesystem::path& out_dir, std::ostream& warn);

}  // namespace lanechange::harness
