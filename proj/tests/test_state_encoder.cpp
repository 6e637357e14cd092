#include <cmath>
#include <set>

#include "doctest.h"
#include "lanechange/state_encoder.hpp"
#include "test_helpers.hpp"

using namespace lanechange;
using namespace lanechange::encoding;
using lanechange::testing::make_world;
using lanechange::testing::npc;

namespace {

// Point-sampling oracle: rows touched by the open body interval (rel - 2.75, rel + 2.75).
std::set<int> rows_oracle(double rel, double length = sim::kVehicleLength) {
  std::set<int> rows;
  const double lo = rel - 0.5 * length;
  const int n = 55000;
  for (int k = 0; k < n; ++k) {
    const double x = lo + (k + 0.5) * length / n;
    const int r = static_cast<int>(std::floor((60.0 - x) / 2.0));
    if (r >= 0 && r < kGridRows) rows.insert(r);
  }
  return rows;
}

std::set<int> marked_rows(const StateTensor& t, int col, bool positive) {
  std::set<int> rows;
  for (int r = 0; r < kGridRows; ++r) {
    const float v = t.at(r, col);
    if (v != kEmptyCell && (positive ? v > 0 : v < 0)) rows.insert(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("normalize_speed") {
  CHECK(normalize_speed(0.0, 0.0, 22.352) == doctest::Approx(0.01));
  CHECK(normalize_speed(22.352, 0.0, 22.352) == doctest::Approx(0.99));
  CHECK(normalize_speed(11.176, 0.0, 22.352) == doctest::Approx(0.5));
  CHECK(normalize_speed(5.0, 3.0, 3.0) == 0.5);
  CHECK(normalize_speed(-4.0, 0.0, 10.0) == doctest::Approx(0.01));
  CHECK(normalize_speed(40.0, 0.0, 10.0) == doctest::Approx(0.99));
}

TEST_CASE("ego-only world") {
  const auto w = make_world(500.0, 1, 11.176, {});
  const StateTensor t = encode(w, EncoderConfig{});
  const std::set<int> expected = rows_oracle(0.0);
  CHECK(expected == std::set<int>{28, 29, 30, 31});
  CHECK(marked_rows(t, 1, true) == expected);
  int empty = 0;
  for (float v : t.grid) empty += v == kEmptyCell;
  CHECK(empty == kGridRows * kGridCols - static_cast<int>(expected.size()));
  for (int r : expected) CHECK(t.at(r, 1) == doctest::Approx(0.5));
  CHECK(t.aux[0] == doctest::Approx(0.5));
  CHECK(t.aux[1] == 1.0f);
  CHECK(t.aux[2] == 1.0f);
}

TEST_CASE("boundary lanes set the aux flags") {
  const StateTensor left = encode(make_world(0.0, 0, 5.0, {}), EncoderConfig{});
  CHECK(left.aux[1] == 0.0f);
  CHECK(left.aux[2] == 1.0f);
  const StateTensor right = encode(make_world(0.0, 2, 5.0, {}), EncoderConfig{});
  CHECK(right.aux[1] == 1.0f);
  CHECK(right.aux[2] == 0.0f);
}

TEST_CASE("NPC straddling row boundaries occupies four cells") {
  // Center on a row boundary: 2.75 m either side reaches into two rows each way.
  const auto w = make_world(100.0, 1, 10.0, {npc(1, 120.0, 0, 10.0)});
  const StateTensor t = encode(w, EncoderConfig{});
  CHECK(marked_rows(t, 0, false) == rows_oracle(20.0));
  CHECK(marked_rows(t, 0, false).size() == 4u);
  // Center mid-row: 3 cells.
  const auto w3 = make_world(100.0, 1, 10.0, {npc(1, 121.0, 2, 10.0)});
  CHECK(marked_rows(encode(w3, EncoderConfig{}), 2, false).size() == 3u);
}

TEST_CASE("range limits") {
  const auto far = make_world(100.0, 1, 10.0, {npc(1, 161.0, 0, 10.0)});
  CHECK(marked_rows(encode(far, EncoderConfig{}), 0, false).empty());
  const auto behind = make_world(100.0, 1, 10.0, {npc(1, 69.0, 0, 10.0)});
  CHECK(marked_rows(encode(behind, EncoderConfig{}), 0, false).empty());
  // Edge of range is clipped to the grid.
  const auto edge = make_world(100.0, 1, 10.0, {npc(1, 160.0, 0, 10.0)});
  CHECK(marked_rows(encode(edge, EncoderConfig{}), 0, false) == std::set<int>{0, 1});
  // Wraparound: NPC just past the lap start is 20 m ahead of an ego near the end.
  const auto wrap = make_world(6936.0, 1, 10.0, {npc(1, 10.0, 0, 10.0)});
  CHECK(marked_rows(encode(wrap, EncoderConfig{}), 0, false) == rows_oracle(20.0));
}

TEST_CASE("NPC cells hold the negated normalized speed") {
  const auto w = make_world(100.0, 1, 10.0, {npc(1, 121.0, 2, 22.352), npc(2, 91.0, 0, 0.0)});
  const StateTensor t = encode(w, EncoderConfig{});
  for (int r : marked_rows(t, 2, false)) CHECK(t.at(r, 2) == doctest::Approx(-0.99));
  for (int r : marked_rows(t, 0, false)) CHECK(t.at(r, 0) == doctest::Approx(-0.01));
}

TEST_CASE("encoder properties on random traffic") {
  sim::SimConfig sc;
  sc.npc_count = 120;
  const sim::TrackConfig track;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    sim::WorldState w = sim::spawn_world(track, sc, seed);
    for (int k = 0; k < 50; ++k) sim::step(w, 0.1);
    const StateTensor t = encode(w, EncoderConfig{});

    // Values in [-1, 1]; 1.0 exactly marks empty cells.
    for (float v : t.grid) {
      CHECK(v >= -1.0f);
      CHECK(v <= 1.0f);
      if (v != kEmptyCell) CHECK(std::abs(v) <= 0.99f + 1e-6f);
    }
    // Purity.
    CHECK(encode(w, EncoderConfig{}) == t);

    // A lone car marks 3 or 4 cells.
    for (const auto& v : w.vehicles) {
      if (v.is_ego) continue;
      const double rel = sim::signed_offset(w.ego().s, v.s, track.lap_length);
      if (rel < -20 || rel > 50) continue;
      const auto solo = make_world(w.ego().s, w.ego().lane == v.lane ? (v.lane + 1) % 3 : w.ego().lane,
                                   w.ego().speed, {npc(v.id, v.s, v.lane, v.speed)});
      const auto n = marked_rows(encode(solo, EncoderConfig{}), v.lane, false).size();
      CHECK((n == 3u || n == 4u));
    }

    // Translation invariance.
    sim::WorldState shifted = w;
    const double delta = 1234.5 + static_cast<double>(seed);
    for (auto& v : shifted.vehicles) v.s = sim::wrap_position(v.s + delta, track.lap_length);
    const StateTensor ts = encode(shifted, EncoderConfig{});
    for (std::size_t i = 0; i < t.grid.size(); ++i) CHECK(ts.grid[i] == doctest::Approx(t.grid[i]));
  }
}

TEST_CASE("encoder rejects non three-lane tracks") {
  auto w = make_world(0.0, 1, 0.0, {});
  w.track.lane_count = 4;
  CHECK_THROWS(encode(w, EncoderConfig{}));
}
