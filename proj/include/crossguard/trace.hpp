// Copyright 2026 The Crossguard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSGUARD__TRACE_HPP_
#define CROSSGUARD__TRACE_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "crossguard/common.hpp"
#include "crossguard/geometry.hpp"

namespace crossguard
{

/// One vehicle at one tick. `position` is the front bumper center.
struct VehicleState
{
  double time_s = 0.0;
  VehicleId vehicle_id = 0;
  Vec2 position{0.0, 0.0};
  double heading_deg = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  int lane_index = 0;
  int edge_index = 0;
  double length = 5.0;
  double width = 1.8;

  Obb body() const { return Obb::vehicle_body(position, heading_deg, length, width); }

  bool operator==(const VehicleState & o) const
  {
    return time_s == o.time_s && vehicle_id == o.vehicle_id && position == o.position &&
           heading_deg == o.heading_deg && speed == o.speed && accel == o.accel &&
           lane_index == o.lane_index && edge_index == o.edge_index && length == o.length &&
           width == o.width;
  }
};

/// Contiguous per-vehicle slice of a trace.
struct Track
{
  int first_tick = 0;
  std::vector<VehicleState> states;
};

/// Recorded simulation output: states grouped by tick, each tick sorted by
/// vehicle id. Tick t covers time t * tick_s.
struct Trace
{
  double tick_s = 0.1;
  std::vector<std::vector<VehicleState>> ticks;

  int tick_count() const { return static_cast<int>(ticks.size()); }

  bool operator==(const Trace & o) const { return tick_s == o.tick_s && ticks == o.ticks; }

  const VehicleState * find(int tick, VehicleId id) const
  {
    if (tick < 0 || tick >= tick_count()) return nullptr;
    const auto & row = ticks[tick];
    auto it = std::lower_bound(
      row.begin(), row.end(), id,
      [](const VehicleState & s, VehicleId v) { return s.vehicle_id < v; });
    if (it == row.end() || it->vehicle_id != id) return nullptr;
    return &*it;
  }

  /// Splits into per-vehicle tracks. A vehicle is expected to occupy a single
  /// contiguous tick range; gaps raise ContractError.
  std::map<VehicleId, Track> tracks() const
  {
    std::map<VehicleId, Track> out;
    for (int t = 0; t < tick_count(); ++t) {
      for (const auto & s : ticks[t]) {
        auto it = out.find(s.vehicle_id);
        if (it == out.end()) {
          out[s.vehicle_id] = Track{t, {s}};
        } else {
          Track & trk = it->second;
          if (trk.first_tick + static_cast<int>(trk.states.size()) != t) {
            throw ContractError("vehicle track has a tick gap");
          }
          trk.states.push_back(s);
        }
      }
    }
    return out;
  }

  /// Keeps only the listed vehicles; empty leading/trailing ticks are kept so
  /// tick indices stay aligned with the source trace.
  Trace filtered(const std::vector<VehicleId> & keep) const
  {
    std::vector<VehicleId> sorted = keep;
    std::sort(sorted.begin(), sorted.end());
    Trace out;
    out.tick_s = tick_s;
    out.ticks.resize(ticks.size());
    for (int t = 0; t < tick_count(); ++t) {
      for (const auto & s : ticks[t]) {
        if (std::binary_search(sorted.begin(), sorted.end(), s.vehicle_id)) {
          out.ticks[t].push_back(s);
        }
      }
    }
    return out;
  }
};

enum class CollisionCategory : std::uint8_t { kRearEnd = 0, kFrontEnd = 1, kSide = 2, kCorner = 3 };

inline const char * collision_category_name(CollisionCategory c)
{
  switch (c) {
    case CollisionCategory::kRearEnd: return "rear_end";
    case CollisionCategory::kFrontEnd: return "front_end";
    case CollisionCategory::kSide: return "side";
    default: return "corner";
  }
}

/// First body contact between a vehicle pair.
struct CollisionEvent
{
  double time_s = 0.0;
  int tick = 0;
  VehicleId a = 0;  // a < b
  VehicleId b = 0;
  CollisionCategory category = CollisionCategory::kSide;
};

/// True when total heading change along the track exceeds 30 degrees.
inline bool track_is_turning(const Track & trk)
{
  if (trk.states.size() < 2) return false;
  double total = 0.0;
  for (std::size_t i = 1; i < trk.states.size(); ++i) {
    total += heading_gap_deg(trk.states[i].heading_deg, trk.states[i - 1].heading_deg);
  }
  return total > 30.0;
}

inline std::map<VehicleId, bool> turning_flags(const Trace & trace)
{
  std::map<VehicleId, bool> out;
  for (const auto & [id, trk] : trace.tracks()) {
    out[id] = track_is_turning(trk);
  }
  return out;
}

inline CollisionCategory classify_collision(
  const VehicleState & a, const VehicleState & b, bool a_turning, bool b_turning)
{
  const double gap = heading_gap_deg(a.heading_deg, b.heading_deg);
  if (gap <= 45.0) return CollisionCategory::kRearEnd;
  if (gap >= 135.0) return CollisionCategory::kFrontEnd;
  return (a_turning && b_turning) ? CollisionCategory::kCorner : CollisionCategory::kSide;
}

/// Scans every tick for body overlap; one event per pair at first contact.
/// Vehicles pass through each other, so later re-contacts of the same pair are
/// not new events.
inline std::vector<CollisionEvent> detect_ground_truth_collisions(const Trace & trace)
{
  const auto turning = turning_flags(trace);
  std::vector<CollisionEvent> events;
  std::map<std::pair<VehicleId, VehicleId>, bool> seen;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row = trace.ticks[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t k = i + 1; k < row.size(); ++k) {
        const auto & a = row[i];
        const auto & b = row[k];
        const auto key = std::make_pair(a.vehicle_id, b.vehicle_id);
        if (seen[key]) continue;
        if ((a.position - b.position).norm() > a.length + b.length) continue;
        if (obb_overlap(a.body(), b.body())) {
          seen[key] = true;
          CollisionEvent ev;
          ev.time_s = a.time_s;
          ev.tick = t;
          ev.a = a.vehicle_id;
          ev.b = b.vehicle_id;
          ev.category =
            classify_collision(a, b, turning.at(a.vehicle_id), turning.at(b.vehicle_id));
          events.push_back(ev);
        }
      }
    }
  }
  return events;
}

/// Index into `row` of the nearest vehicle ahead of `row[self]` on the same
/// edge and lane, or -1. Ahead means a positive projection onto the follower's
/// heading direction.
inline int preceding_index(const std::vector<VehicleState> & row, std::size_t self)
{
  const VehicleState & ego = row[self];
  const Vec2 dir = heading_dir(ego.heading_deg);
  int best = -1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i == self) continue;
    const VehicleState & other = row[i];
    if (other.edge_index != ego.edge_index || other.lane_index != ego.lane_index) continue;
    const double proj = (other.position - ego.position).dot(dir);
    if (proj <= 0.0) continue;
    if (proj < best_gap) {
      best_gap = proj;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace crossguard

#endif  // CROSSGUARD__TRACE_HPP_
