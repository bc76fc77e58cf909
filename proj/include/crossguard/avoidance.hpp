// Copyright 2026 The Crossguard Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CROSSGUARD__AVOIDANCE_HPP_
#define CROSSGUARD__AVOIDANCE_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/common.hpp"
#include "crossguard/detection.hpp"
#include "crossguard/geometry.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

enum class DriverType { kHuman = 0, kAutomated = 1 };

inline const char * driver_type_name(DriverType d)
{
  return d == DriverType::kHuman ? "human" : "automated";
}

inline DriverType driver_type_from_name(const std::string & name)
{
  if (name == "human") return DriverType::kHuman;
  if (name == "automated") return DriverType::kAutomated;
  throw ConfigError("unknown driver type: " + name);
}

/// Latency chain between a hazard becoming observable and the brake pedal:
/// radio transmission, edge detection, pipeline processing, and driver
/// reaction. Automated drivers react instantly; humans draw from a
/// truncated normal.
struct LatencyConfig
{
  double transmission_lo_ms = 2.4;
  double transmission_hi_ms = 18.0;
  double transmission_alpha = 2.0;
  double transmission_beta = 5.0;
  double detection_ms = 23.0;
  double processing_ms = 400.0;
  double reaction_mean_ms = 680.0;
  double reaction_sd_ms = 145.0;
  double reaction_lo_z = -1.24;
  double reaction_hi_z = 1.52;

  void validate() const
  {
    if (!(transmission_lo_ms < transmission_hi_ms)) {
      throw ConfigError("transmission latency bounds must be ordered");
    }
    if (detection_ms < 0.0 || processing_ms < 0.0) {
      throw ConfigError("latency terms must be nonnegative");
    }
    if (reaction_sd_ms <= 0.0) {
      throw ConfigError("reaction latency spread must be positive");
    }
  }
};

struct LatencyDraw
{
  double transmission_ms = 0.0;
  double detection_ms = 0.0;
  double processing_ms = 0.0;
  double reaction_ms = 0.0;

  double total_s() const
  {
    return (transmission_ms + detection_ms + processing_ms + reaction_ms) /
           1000.0;
  }
};

inline LatencyDraw sample_latency(
  const LatencyConfig & cfg, DriverType driver, rng::Engine & eng)
{
  LatencyDraw d;
  d.transmission_ms =
    cfg.transmission_lo_ms +
    (cfg.transmission_hi_ms - cfg.transmission_lo_ms) *
      rng::beta(eng, cfg.transmission_alpha, cfg.transmission_beta);
  d.detection_ms = cfg.detection_ms;
  d.processing_ms = cfg.processing_ms;
  if (driver == DriverType::kHuman) {
    d.reaction_ms = rng::truncated_normal(
      eng, cfg.reaction_mean_ms, cfg.reaction_sd_ms, cfg.reaction_lo_z,
      cfg.reaction_hi_z);
  }
  return d;
}

/// Arc-length view of one vehicle's recorded track, for replaying the same
/// path with altered speed. Times are continuous; positions between ticks
/// interpolate linearly along the recorded polyline.
class RecordedTrack
{
public:
  static RecordedTrack extract(const Trace & trace, VehicleId id)
  {
    RecordedTrack rt;
    rt.tick_s_ = trace.tick_s;
    for (int t = 0; t < trace.tick_count(); ++t) {
      const VehicleState * s = trace.find(t, id);
      if (s == nullptr) {
        if (!rt.positions_.empty()) break;  // tracks are contiguous
        continue;
      }
      if (rt.positions_.empty()) rt.first_tick_ = t;
      rt.positions_.push_back(s->position);
      rt.headings_.push_back(s->heading_deg);
      rt.speeds_.push_back(s->speed);
      rt.length_m_ = s->length;
      rt.width_m_ = s->width;
    }
    if (rt.positions_.empty()) {
      throw ContractError("vehicle absent from trace");
    }
    rt.arc_.resize(rt.positions_.size(), 0.0);
    for (std::size_t i = 1; i < rt.positions_.size(); ++i) {
      rt.arc_[i] = rt.arc_[i - 1] + (rt.positions_[i] - rt.positions_[i - 1]).norm();
    }
    return rt;
  }

  double first_time_s() const { return first_tick_ * tick_s_; }
  double last_time_s() const
  {
    return (first_tick_ + static_cast<int>(positions_.size()) - 1) * tick_s_;
  }
  double total_arc_m() const { return arc_.back(); }

  double arc_at_time(double t) const
  {
    const double u = (t - first_time_s()) / tick_s_;
    if (u <= 0.0) return 0.0;
    const double last = static_cast<double>(arc_.size() - 1);
    if (u >= last) return arc_.back();
    const auto i = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i);
    return arc_[i] + frac * (arc_[i + 1] - arc_[i]);
  }

  double speed_at_time(double t) const
  {
    const double u = (t - first_time_s()) / tick_s_;
    if (u <= 0.0) return speeds_.front();
    const double last = static_cast<double>(speeds_.size() - 1);
    if (u >= last) return speeds_.back();
    const auto i = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(i);
    return speeds_[i] + frac * (speeds_[i + 1] - speeds_[i]);
  }

  Obb body_at_arc(double s) const
  {
    std::size_t i =
      static_cast<std::size_t>(
        std::upper_bound(arc_.begin(), arc_.end(), s) - arc_.begin());
    if (i > 0) i -= 1;
    if (i + 1 >= arc_.size()) {
      return Obb::vehicle_body(
        positions_.back(), headings_.back(), length_m_, width_m_);
    }
    const double seg = arc_[i + 1] - arc_[i];
    // Stationary stretches contribute zero arc; stay on the earlier vertex.
    const double frac = seg > 1e-12 ? (s - arc_[i]) / seg : 0.0;
    const Vec2 p =
      positions_[i] + frac * (positions_[i + 1] - positions_[i]);
    return Obb::vehicle_body(p, headings_[i], length_m_, width_m_);
  }

private:
  int first_tick_ = 0;
  double tick_s_ = 0.1;
  double length_m_ = 5.0;
  double width_m_ = 1.8;
  std::vector<Vec2> positions_;
  std::vector<double> headings_;
  std::vector<double> speeds_;
  std::vector<double> arc_;
};

struct BrakeOutcome
{
  bool impact = false;
  double impact_time_s = std::numeric_limits<double>::quiet_NaN();
  double impact_speed_a = 0.0;
  double impact_speed_b = 0.0;
};

namespace detail
{

/// Replayed state of one vehicle at continuous time t: its position follows
/// the recorded path exactly until brake_time_s, then continues along the
/// same path under constant deceleration until standstill. Returns false
/// once the vehicle has left its recorded path (it exited the scene).
struct Replay
{
  const RecordedTrack & track;
  double brake_time_s;
  double decel;
  double brake_arc;    // arc position where braking begins
  double brake_speed;  // speed when braking begins

  Replay(const RecordedTrack & rt, double brake_s, double d)
  : track(rt), brake_time_s(brake_s), decel(d),
    brake_arc(rt.arc_at_time(brake_s)),
    brake_speed(rt.speed_at_time(brake_s))
  {
  }

  bool present(double t, Obb & body, double & speed) const
  {
    if (t < track.first_time_s()) return false;
    if (t <= brake_time_s) {
      if (t > track.last_time_s()) return false;  // exited while unbraked
      body = track.body_at_arc(track.arc_at_time(t));
      speed = track.speed_at_time(t);
      return true;
    }
    const double dt = t - brake_time_s;
    const double stop_dt = brake_speed / decel;
    const double run = std::min(dt, stop_dt);
    const double s = brake_arc + brake_speed * run - 0.5 * decel * run * run;
    if (s >= track.total_arc_m() && brake_arc < track.total_arc_m()) {
      return false;  // rolled off the end of the recorded path
    }
    body = track.body_at_arc(std::min(s, track.total_arc_m()));
    speed = std::max(0.0, brake_speed - decel * dt);
    return true;
  }
};

}  // namespace detail

/// Replays both vehicles along their recorded paths, braking each at its own
/// continuous start time, and reports the first body overlap on the tick
/// grid. Infinite brake times replay the recording unchanged.
inline BrakeOutcome simulate_braking(
  const Trace & trace, VehicleId a, VehicleId b, double brake_time_a_s,
  double brake_time_b_s, double decel_mps2)
{
  if (decel_mps2 <= 0.0) {
    throw ConfigError("deceleration must be positive");
  }
  const RecordedTrack ta = RecordedTrack::extract(trace, a);
  const RecordedTrack tb = RecordedTrack::extract(trace, b);
  const detail::Replay ra(ta, brake_time_a_s, decel_mps2);
  const detail::Replay rb(tb, brake_time_b_s, decel_mps2);

  double end_s = std::max(ta.last_time_s(), tb.last_time_s());
  for (const detail::Replay * r : {&ra, &rb}) {
    if (std::isfinite(r->brake_time_s)) {
      end_s = std::max(end_s, r->brake_time_s + r->brake_speed / decel_mps2);
    }
  }

  BrakeOutcome out;
  const double tick = trace.tick_s;
  const int steps = static_cast<int>(std::ceil(end_s / tick)) + 1;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * tick;
    Obb body_a;
    Obb body_b;
    double speed_a = 0.0;
    double speed_b = 0.0;
    if (!ra.present(t, body_a, speed_a)) continue;
    if (!rb.present(t, body_b, speed_b)) continue;
    if (obb_overlap(body_a, body_b)) {
      out.impact = true;
      out.impact_time_s = t;
      out.impact_speed_a = speed_a;
      out.impact_speed_b = speed_b;
      return out;
    }
  }
  return out;
}

/// One detected collision to replay: the colliding pair and its first
/// pre-collision alarm.
struct AvoidanceEpisode
{
  VehicleId a = 0;
  VehicleId b = 0;
  int alarm_tick = 0;
  int collision_tick = 0;
};

/// Hits extracted from a detection log, in canonical pair order.
inline std::vector<AvoidanceEpisode> collect_episodes(
  const DetectionLog & log, const std::vector<CollisionEvent> & collisions)
{
  std::map<std::pair<VehicleId, VehicleId>, int> collision_tick;
  for (const CollisionEvent & ev : collisions) {
    const auto key = std::make_pair(ev.a, ev.b);
    const auto it = collision_tick.find(key);
    if (it == collision_tick.end() || ev.tick < it->second) {
      collision_tick[key] = ev.tick;
    }
  }
  std::map<std::pair<VehicleId, VehicleId>, int> first_alarm;
  for (const DetectionRecord & r : log.records) {
    if (!r.fired) continue;
    const auto key = std::make_pair(r.a, r.b);
    const auto col = collision_tick.find(key);
    if (col == collision_tick.end() || r.tick >= col->second) continue;
    const auto it = first_alarm.find(key);
    if (it == first_alarm.end() || r.tick < it->second) {
      first_alarm[key] = r.tick;
    }
  }
  std::vector<AvoidanceEpisode> out;
  for (const auto & [key, tick] : first_alarm) {
    out.push_back(
      AvoidanceEpisode{key.first, key.second, tick, collision_tick.at(key)});
  }
  return out;
}

struct AvoidanceCellReport
{
  double decel_mps2 = 0.0;
  std::string driver;
  int episodes = 0;
  int avoided = 0;
  double avoided_fraction = 0.0;
  /// Mean over episodes of the two vehicles' mean impact speed; an avoided
  /// episode contributes zero with-action speed.
  double mean_impact_speed_no_action_mps = 0.0;
  double mean_impact_speed_with_action_mps = 0.0;
  double mean_impact_speed_reduction = 0.0;

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["decel_mps2"] = decel_mps2;
    j["driver"] = driver;
    j["episodes"] = episodes;
    j["avoided"] = avoided;
    j["avoided_fraction"] = avoided_fraction;
    j["mean_impact_speed_no_action_mps"] = mean_impact_speed_no_action_mps;
    j["mean_impact_speed_with_action_mps"] = mean_impact_speed_with_action_mps;
    j["mean_impact_speed_reduction"] = mean_impact_speed_reduction;
    return j;
  }
};

struct AvoidanceReport
{
  int trials = 0;
  std::uint64_t seed = 0;
  std::vector<AvoidanceCellReport> cells;

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["trials"] = trials;
    j["seed"] = seed;
    j["cells"] = nlohmann::json::array();
    for (const AvoidanceCellReport & c : cells) {
      j["cells"].push_back(c.to_json());
    }
    return j;
  }
};

/// Replays every detected collision under each (deceleration, driver) cell,
/// drawing fresh per-vehicle latencies each trial. The no-action baseline
/// replays the recording unchanged.
inline AvoidanceReport evaluate_avoidance(
  const Trace & trace, const std::vector<CollisionEvent> & collisions,
  const DetectionLog & log, const LatencyConfig & latency,
  const std::vector<double> & decels, const std::vector<DriverType> & drivers,
  int trials, std::uint64_t seed)
{
  latency.validate();
  if (trials < 1) {
    throw ConfigError("avoidance needs at least one trial");
  }
  const std::vector<AvoidanceEpisode> episodes = collect_episodes(log, collisions);
  const double inf = std::numeric_limits<double>::infinity();

  std::map<std::pair<VehicleId, VehicleId>, double> baseline;
  for (const AvoidanceEpisode & ep : episodes) {
    const BrakeOutcome base =
      simulate_braking(trace, ep.a, ep.b, inf, inf, 1.0);
    baseline[{ep.a, ep.b}] =
      base.impact ? 0.5 * (base.impact_speed_a + base.impact_speed_b) : 0.0;
  }

  AvoidanceReport report;
  report.trials = trials;
  report.seed = seed;
  std::uint64_t cell_index = 0;
  for (double decel : decels) {
    for (DriverType driver : drivers) {
      AvoidanceCellReport cell;
      cell.decel_mps2 = decel;
      cell.driver = driver_type_name(driver);
      double sum_base = 0.0;
      double sum_with = 0.0;
      for (int trial = 0; trial < trials; ++trial) {
        rng::Engine eng =
          rng::derive(seed, 0x40000 + cell_index * 0x1000 + static_cast<std::uint64_t>(trial));
        for (const AvoidanceEpisode & ep : episodes) {
          const double alarm_s = ep.alarm_tick * trace.tick_s;
          const double brake_a =
            alarm_s + sample_latency(latency, driver, eng).total_s();
          const double brake_b =
            alarm_s + sample_latency(latency, driver, eng).total_s();
          const BrakeOutcome o =
            simulate_braking(trace, ep.a, ep.b, brake_a, brake_b, decel);
          cell.episodes += 1;
          if (!o.impact) cell.avoided += 1;
          sum_base += baseline.at({ep.a, ep.b});
          sum_with +=
            o.impact ? 0.5 * (o.impact_speed_a + o.impact_speed_b) : 0.0;
        }
      }
      if (cell.episodes > 0) {
        cell.avoided_fraction =
          static_cast<double>(cell.avoided) / cell.episodes;
        cell.mean_impact_speed_no_action_mps = sum_base / cell.episodes;
        cell.mean_impact_speed_with_action_mps = sum_with / cell.episodes;
      }
      if (cell.mean_impact_speed_no_action_mps > 0.0) {
        cell.mean_impact_speed_reduction =
          1.0 - cell.mean_impact_speed_with_action_mps /
                  cell.mean_impact_speed_no_action_mps;
      }
      report.cells.push_back(cell);
      cell_index += 1;
    }
  }
  return report;
}

}  // namespace crossguard

#endif  // CROSSGUARD__AVOIDANCE_HPP_
