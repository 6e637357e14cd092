#include "lanechange/state_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lanechange::encoding {

void EncoderConfig::validate() const {
  if (!(row_span > 0.0) || range_ahead < 0.0 || range_behind < 0.0)
    throw std::invalid_argument("encoder: ranges must be non-negative and row_span positive");
  const double rows = (range_ahead + range_behind) / row_span;
  if (std::abs(rows - kGridRows) > 1e-9)
    throw std::invalid_argument("encoder: (range_ahead + range_behind) / row_span must equal 45");
  if (!(v_ceil > v_floor)) throw std::invalid_argument("encoder: v_ceil must exceed v_floor");
}

double normalize_speed(double v, double v_min, double v_max) {
  if (v_max == v_min) return 0.5;
  const double x = (v - v_min) / (v_max - v_min);
  return std::clamp(x, kMinNormalizedSpeed, kMaxNormalizedSpeed);
}

namespace {

// Marks rows whose [lo, hi) span (relative to the ego) meets the open body interval.
void mark_body(StateTensor& out, const EncoderConfig& cfg, double rel, double length, int col,
               float value) {
  const double body_lo = rel - 0.5 * length;
  const double body_hi = rel + 0.5 * length;
  // Row r covers [range_ahead - (r + 1) * span, range_ahead - r * span).
  const int first = std::max(0, static_cast<int>(std::floor((cfg.range_ahead - body_hi) / cfg.row_span)));
  const int last =
      std::min(kGridRows - 1, static_cast<int>(std::ceil((cfg.range_ahead - body_lo) / cfg.row_span)) - 1);
  for (int r = first; r <= last; ++r) {
    const double row_hi = cfg.range_ahead - r * cfg.row_span;
    const double row_lo = row_hi - cfg.row_span;
    if (body_lo < row_hi && body_hi > row_lo) out.at(r, col) = value;
  }
}

}  // namespace

StateTensor encode(const sim::WorldState& world, const EncoderConfig& cfg) {
  if (world.track.lane_count != kGridCols)
    throw std::invalid_argument("encode: grid expects exactly 3 lanes");
  StateTensor out;
  out.grid.fill(kEmptyCell);

  const sim::VehicleState& ego = world.ego();
  for (const auto& v : world.vehicles) {
    if (v.is_ego) continue;
    const double rel = sim::signed_offset(ego.s, v.s, world.track.lap_length);
    if (rel < -cfg.range_behind || rel > cfg.range_ahead) continue;
    const auto value = static_cast<float>(-normalize_speed(v.speed, cfg.v_floor, cfg.v_ceil));
    mark_body(out, cfg, rel, v.length, v.lane, value);
  }
  const auto ego_speed = static_cast<float>(normalize_speed(ego.speed, cfg.v_floor, cfg.v_ceil));
  mark_body(out, cfg, 0.0, ego.length, ego.lane, ego_speed);

  out.aux = {ego_speed, ego.lane > 0 ? 1.0f : 0.0f,
             ego.lane < world.track.lane_count - 1 ? 1.0f : 0.0f};
  return out;
}

}  // namespace lanechange::encoding
