#pragma once

#include <array>
#include <cstddef>

#include "lanechange/sim_core.hpp"

namespace lanechange::encoding {

inline constexpr int kGridRows = 45;
inline constexpr int kGridCols = 3;
inline constexpr int kAuxSize = 3;
inline constexpr float kEmptyCell = 1.0f;

// Occupancy grid around the ego. Row 0 is the farthest point ahead, column 0 the
// leftmost lane. Empty cells are exactly 1; the ego's cells hold +speed, other
// cars' cells -speed (normalized into [0.01, 0.99]).
struct StateTensor {
  std::array<float, kGridRows * kGridCols> grid{};
  // (ego normalized speed, left lane exists, right lane exists)
  std::array<float, kAuxSize> aux{};

  float at(int row, int col) const { return grid[static_cast<std::size_t>(row * kGridCols + col)]; }
  float& at(int row, int col) { return grid[static_cast<std::size_t>(row * kGridCols + col)]; }

  bool operator==(const StateTensor&) const = default;
};

struct EncoderConfig {
  double range_ahead = 60.0;
  double range_behind = 30.0;
  double row_span = 2.0;
  double v_floor = 0.0;
  double v_ceil = 22.352;

  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

inline constexpr double kMinNormalizedSpeed = 0.01;
inline constexpr double kMaxNormalizedSpeed = 0.99;

double normalize_speed(double v, double v_min, double v_max);

StateTensor encode(const sim::WorldState& world, const EncoderConfig& cfg);

}  // namespace lanechange::encoding
