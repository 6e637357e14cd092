#include "lanechange/harness/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lanechange::harness {

namespace {

constexpr int kColumns = 8;

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_cell(const std::string& cell, int line_no, const char* column) {
  std::istringstream is(cell);
  T v{};
  is >> v;
  if (!is || !is.eof())
    throw MetricsFormatError("metrics CSV line " + std::to_string(line_no) + ": bad " + column +
                             " value '" + cell + "'");
  return v;
}

}  // namespace

std::string metrics_csv_header() {
  return "episode,phase,lane_changes,collisions,avg_speed_mph,distance_m,return,eps";
}

std::string metrics_csv_row(const EpisodeMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.6f,%.3f,%.6f,%.6f", m.episode,
                std::string(to_string(m.phase)).c_str(), m.lane_changes, m.collisions,
                m.avg_speed_mph, m.distance_m, m.discounted_return, m.eps_at_end);
  return buf;
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != metrics_csv_header())
        throw MetricsFormatError("metrics CSV line 1: unexpected header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != kColumns)
      throw MetricsFormatError("metrics CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(kColumns) + " columns, got " +
                               std::to_string(cells.size()));
    MetricsRow r;
    r.episode = parse_cell<int>(cells[0], line_no, "episode");
    r.phase = cells[1];
    if (r.phase != "train" && r.phase != "eval")
      throw MetricsFormatError("metrics CSV line " + std::to_string(line_no) + ": bad phase '" +
                               r.phase + "'");
    r.lane_changes = parse_cell<int>(cells[2], line_no, "lane_changes");
    r.collisions = parse_cell<int>(cells[3], line_no, "collisions");
    r.avg_speed_mph = parse_cell<double>(cells[4], line_no, "avg_speed_mph");
    r.distance_m = parse_cell<double>(cells[5], line_no, "distance_m");
    r.discounted_return = parse_cell<double>(cells[6], line_no, "return");
    r.eps = parse_cell<double>(cells[7], line_no, "eps");
    rows.push_back(std::move(r));
  }
  if (line_no == 0) throw MetricsFormatError("metrics CSV is empty (no header)");
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricsFormatError("cannot open metrics CSV " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str());
}

std::string_view to_string(Method m) { return m == Method::kDqn ? "dqn" : "rule_based_dqn"; }

RunSummary summarize(const std::vector<EpisodeMetrics>& episodes, Method method) {
  if (episodes.empty()) throw std::invalid_argument("summarize: no episodes (safety rate undefined)");
  RunSummary s;
  s.method = method;
  s.episodes = static_cast<int>(episodes.size());
  int crash_free = 0;
  for (const auto& e : episodes) {
    s.avg_speed_mph += e.avg_speed_mph;
    s.avg_lane_changes += e.lane_changes;
    if (e.collisions == 0) ++crash_free;
  }
  s.avg_speed_mph /= s.episodes;
  s.avg_lane_changes /= s.episodes;
  s.safety_rate = static_cast<double>(crash_free) / s.episodes;
  return s;
}

std::string format_summary(const RunSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "method=%s episodes=%d avg_speed_mph=%.2f avg_lane_changes=%.2f safety_rate=%.2f",
                std::string(to_string(s.method)).c_str(), s.episodes, s.avg_speed_mph,
                s.avg_lane_changes, s.safety_rate);
  return buf;
}

PlotSeries lane_change_series(const std::vector<MetricsRow>& rows) {
  PlotSeries out;
  for (const auto& r : rows)
    (r.phase == "train" ? out.train : out.eval).emplace_back(r.episode, r.lane_changes);
  return out;
}

PlotOutput emit_plot_data(const std::filesystem::path& metrics_csv,
                          const std::filesystem::path& out_dir, std::ostream& warn) {
  const auto rows = read_metrics_csv(metrics_csv);
  PlotOutput out;
  out.series = lane_change_series(rows);
  out.empty = rows.empty();
  if (out.empty) warn << "warning: " << metrics_csv.string() << " has no data rows\n";

  std::filesystem::create_directories(out_dir);
  out.train_file = out_dir / "train_lane_changes.dat";
  out.eval_file = out_dir / "eval_lane_changes.dat";
  const auto write = [](const std::filesystem::path& p, const std::vector<std::pair<int, int>>& s) {
    std::ofstream f(p, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << "# episode lane_changes\n";
    for (const auto& [ep, n] : s) f << ep << ' ' << n << '\n';
  };
  write(out.train_file, out.series.train);
  write(out.eval_file, out.series.eval);
  return out;
}

}  // namespace lanechange::harness
