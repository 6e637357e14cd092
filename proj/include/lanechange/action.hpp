#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace lanechange {

// High-level lateral decision. Lane 0 is the leftmost lane, so "right" means lane + 1.
enum class Action : int {
  kKeepLane = 0,
  kRightLane = 1,
  kLeftLane = 2,
};

inline constexpr int kActionCount = 3;
inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::kKeepLane, Action::kRightLane, Action::kLeftLane};

inline constexpr int to_index(Action a) { return static_cast<int>(a); }

inline std::optional<Action> action_from_index(int i) {
  if (i < 0 || i >= kActionCount) return std::nullopt;
  return static_cast<Action>(i);
}

inline constexpr bool is_lane_change(Action a) { return a != Action::kKeepLane; }

// Lane index the action points at; may be out of range (illegal edge-lane request).
inline constexpr int target_lane(int lane, Action a) {
  switch (a) {
    case Action::kRightLane: return lane + 1;
    case Action::kLeftLane: return lane - 1;
    case Action::kKeepLane: break;
  }
  return lane;
}

inline std::string_view to_string(Action a) {
  switch (a) {
    case Action::kKeepLane: return "keep";
    case Action::kRightLane: return "right";
    case Action::kLeftLane: return "left";
  }
  return "?";
}

}  // namespace lanechange
