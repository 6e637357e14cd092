#include "lanechange/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lanechange::harness {

namespace {

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double x = 0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return x;
}

template <typename Int>
Int parse_int(const std::string& v) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

// Shortest text that parses back to the same double.
std::string show(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Member>
Field real(std::string key, Member member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { member(c) = parse_double(v); },
          [member](const RunConfig& c) { return show(member(const_cast<RunConfig&>(c))); }};
}

template <typename Int, typename Member>
Field integer(std::string key, Member member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { member(c) = parse_int<Int>(v); },
          [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); }};
}

template <typename Member>
Field boolean(std::string key, Member member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { member(c) = parse_bool(v); },
          [member](const RunConfig& c) {
            return std::string(member(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

#define FIELD(path) [](RunConfig& c) -> auto& { return c.path; }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      real("track.lap_length", FIELD(track.lap_length)),
      integer<int>("track.lane_count", FIELD(track.lane_count)),
      real("track.lane_width", FIELD(track.lane_width)),
      real("track.speed_limit", FIELD(track.speed_limit)),

      real("sim.dt", FIELD(sim.dt)),
      integer<int>("sim.npc_count", FIELD(sim.npc_count)),
      real("sim.npc_speed_min", FIELD(sim.npc_speed_min)),
      real("sim.npc_speed_max", FIELD(sim.npc_speed_max)),
      real("sim.min_spawn_gap", FIELD(sim.min_spawn_gap)),
      real("sim.max_episode_time", FIELD(sim.max_episode_time)),
      {"sim.npc_behavior",
       [](RunConfig& c, const std::string& v) {
         if (v == "car_following")
           c.sim.npc_behavior = sim::NpcBehavior::kCarFollowing;
         else if (v == "hold_speed")
           c.sim.npc_behavior = sim::NpcBehavior::kHoldSpeed;
         else
           throw ConfigError("expected car_following or hold_speed, got '" + v + "'");
       },
       [](const RunConfig& c) {
         return std::string(c.sim.npc_behavior == sim::NpcBehavior::kHoldSpeed ? "hold_speed"
                                                                               : "car_following");
       }},

      real("encoder.range_ahead", FIELD(encoder.range_ahead)),
      real("encoder.range_behind", FIELD(encoder.range_behind)),
      real("encoder.row_span", FIELD(encoder.row_span)),
      real("encoder.v_floor", FIELD(encoder.v_floor)),
      real("encoder.v_ceil", FIELD(encoder.v_ceil)),

      real("reward.collision", FIELD(reward.collision)),
      real("reward.illegal_change", FIELD(reward.illegal_change)),
      real("reward.invalid_change", FIELD(reward.invalid_change)),
      real("reward.lane_change_cost", FIELD(reward.lane_change_cost)),
      real("reward.lambda", FIELD(reward.lambda)),
      real("reward.v_ref_mph", FIELD(reward.v_ref_mph)),

      {"safety.horizon",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto")
           c.safety.horizon.reset();
         else
           c.safety.horizon = parse_double(v);
       },
       [](const RunConfig& c) { return c.safety.horizon ? show(*c.safety.horizon) : "auto"; }},
      real("safety.horizon_tail", FIELD(safety.horizon_tail)),
      real("safety.sample_dt", FIELD(safety.sample_dt)),
      real("safety.min_gap", FIELD(safety.min_gap)),
      real("safety.lateral_conflict_width", FIELD(safety.lateral_conflict_width)),

      real("train.gamma", FIELD(train.gamma)),
      real("train.lr", FIELD(train.lr)),
      integer<std::uint32_t>("train.batch_size", FIELD(train.batch_size)),
      integer<std::uint32_t>("train.buffer_capacity", FIELD(train.buffer_capacity)),
      integer<std::uint32_t>("train.target_sync_every", FIELD(train.target_sync_every)),
      real("train.eps0", FIELD(train.eps0)),
      real("train.eps_decay", FIELD(train.eps_decay)),
      real("train.eps_min", FIELD(train.eps_min)),

      integer<int>("harness.episodes", FIELD(harness.episodes)),
      integer<int>("harness.eval_episodes", FIELD(harness.eval_episodes)),
      integer<int>("harness.checkpoint_every", FIELD(harness.checkpoint_every)),
      integer<std::uint64_t>("harness.seed", FIELD(harness.seed)),
      boolean("harness.filter", FIELD(harness.filter)),
      real("harness.keep_lane_period", FIELD(harness.keep_lane_period)),
      real("harness.invalid_lookahead", FIELD(harness.invalid_lookahead)),
  };
  return table;
}

#undef FIELD

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void RunConfig::validate() const {
  track.validate();
  sim.validate(track);
  encoder.validate();
  reward.validate();
  safety.validate();
  train.validate();
  if (track.lane_count != encoding::kGridCols)
    throw std::invalid_argument("track.lane_count must be 3 for the 45x3 state grid");
  if (harness.episodes < 0 || harness.eval_episodes < 0)
    throw std::invalid_argument("harness: episode counts must be non-negative");
  if (harness.checkpoint_every <= 0)
    throw std::invalid_argument("harness: checkpoint_every must be positive");
  if (!(harness.keep_lane_period >= sim.dt))
    throw std::invalid_argument("harness: keep_lane_period must be at least one sim step");
  if (harness.invalid_lookahead < 0)
    throw std::invalid_argument("harness: invalid_lookahead must be non-negative");
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end())
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

}  // namespace lanechange::harness
