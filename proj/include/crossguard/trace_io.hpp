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

#ifndef CROSSGUARD__TRACE_IO_HPP_
#define CROSSGUARD__TRACE_IO_HPP_

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/idm.hpp"
#include "crossguard/layout.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

/// Shortest exact decimal form of a double; survives a strtod round trip.
inline std::string fmt_g17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline constexpr const char * kTraceCsvHeader =
  "time_s,vehicle_id,x_m,y_m,heading_deg,speed_mps,accel_mps2,lane_index,edge_index,length_m,"
  "width_m";

inline void emit_trace_csv(const Trace & trace, std::ostream & os)
{
  os << kTraceCsvHeader << '\n';
  for (const auto & row : trace.ticks) {
    for (const auto & s : row) {
      os << fmt_g17(s.time_s) << ',' << s.vehicle_id << ',' << fmt_g17(s.position.x()) << ','
         << fmt_g17(s.position.y()) << ',' << fmt_g17(s.heading_deg) << ',' << fmt_g17(s.speed)
         << ',' << fmt_g17(s.accel) << ',' << s.lane_index << ',' << s.edge_index << ','
         << fmt_g17(s.length) << ',' << fmt_g17(s.width) << '\n';
    }
  }
}

inline void emit_trace_csv(const Trace & trace, const std::string & path)
{
  std::ofstream os(path);
  if (!os) throw Error("cannot open for write: " + path);
  emit_trace_csv(trace, os);
}

/// Reads rows back into ticks at round(time_s / tick_s). Trailing ticks with
/// no vehicles have no row representation and are not reconstructed.
inline Trace ingest_trace_csv(std::istream & is, double tick_s)
{
  if (tick_s <= 0.0) throw ConfigError("tick_s must be positive");
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("empty trace stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceCsvHeader) throw SchemaError("unexpected trace header: " + line);
  Trace trace;
  trace.tick_s = tick_s;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 11) {
      throw SchemaError("line " + std::to_string(line_no) + ": expected 11 columns");
    }
    VehicleState s;
    try {
      s.time_s = std::stod(cols[0]);
      s.vehicle_id = static_cast<VehicleId>(std::stoul(cols[1]));
      s.position = Vec2{std::stod(cols[2]), std::stod(cols[3])};
      s.heading_deg = std::stod(cols[4]);
      s.speed = std::stod(cols[5]);
      s.accel = std::stod(cols[6]);
      s.lane_index = std::stoi(cols[7]);
      s.edge_index = std::stoi(cols[8]);
      s.length = std::stod(cols[9]);
      s.width = std::stod(cols[10]);
    } catch (const std::exception &) {
      throw SchemaError("line " + std::to_string(line_no) + ": malformed value");
    }
    const int tick = static_cast<int>(std::lround(s.time_s / tick_s));
    if (tick < 0) throw SchemaError("negative time");
    if (tick >= trace.tick_count()) trace.ticks.resize(tick + 1);
    trace.ticks[tick].push_back(s);
  }
  for (auto & row : trace.ticks) {
    std::sort(row.begin(), row.end(), [](const VehicleState & a, const VehicleState & b) {
      return a.vehicle_id < b.vehicle_id;
    });
  }
  return trace;
}

inline Trace ingest_trace_csv(const std::string & path, double tick_s)
{
  std::ifstream is(path);
  if (!is) throw Error("cannot open for read: " + path);
  return ingest_trace_csv(is, tick_s);
}

/// Deterministically scripted vehicle, used alongside or instead of random
/// arrivals.
struct ScriptedSpawn
{
  double time_s = 0.0;
  int arm = 0;
  Movement movement = Movement::kStraight;
  int lane = 0;
  double speed = 10.0;
  bool ignore_priority = false;
  bool constant_speed = false;
};

struct ScenarioConfig
{
  double duration_s = 600.0;
  double tick_s = 0.1;
  double spawn_rate_per_arm = 0.08;  // vehicles per second per arm
  double route_mix_straight = 0.7;
  double route_mix_left = 0.15;
  double route_mix_right = 0.15;
  double speed_limit_mps = 13.9;
  double ignore_priority_fraction = 0.05;
  std::uint64_t seed = 1;

  int lanes_per_approach = 1;
  double arm_length = 150.0;
  double lane_width = 3.2;
  double corner_setback = 4.0;
  double vehicle_length = 5.0;
  double vehicle_width = 1.8;
  double desired_speed_lo = 0.85;
  double desired_speed_hi = 1.15;
  IdmParams idm;
  std::vector<ScriptedSpawn> scripted;
  bool scripted_only = false;

  void validate() const
  {
    if (duration_s <= 0.0) throw ConfigError("duration_s must be positive");
    if (tick_s <= 0.0) throw ConfigError("tick_s must be positive");
    if (spawn_rate_per_arm < 0.0) throw ConfigError("spawn_rate_per_arm must be >= 0");
    const double mix = route_mix_straight + route_mix_left + route_mix_right;
    if (route_mix_straight < 0.0 || route_mix_left < 0.0 || route_mix_right < 0.0 ||
        std::fabs(mix - 1.0) > 1e-6) {
      throw ConfigError("route_mix entries must be non-negative and sum to 1");
    }
    if (speed_limit_mps <= 0.0) throw ConfigError("speed_limit_mps must be positive");
    if (ignore_priority_fraction < 0.0 || ignore_priority_fraction > 1.0) {
      throw ConfigError("ignore_priority_fraction must lie in [0, 1]");
    }
    if (lanes_per_approach < 1) throw ConfigError("lanes_per_approach must be >= 1");
    if (corner_setback < 0.0) throw ConfigError("corner_setback must be >= 0");
    if (desired_speed_lo <= 0.0 || desired_speed_hi < desired_speed_lo) {
      throw ConfigError("desired speed factor range is invalid");
    }
    for (const auto & sp : scripted) {
      if (sp.arm < 0 || sp.arm > 3) throw ConfigError("scripted arm out of range");
      if (sp.lane < 0 || sp.lane >= lanes_per_approach) {
        throw ConfigError("scripted lane out of range");
      }
      if (sp.time_s < 0.0 || sp.time_s > duration_s) {
        throw ConfigError("scripted time outside scenario duration");
      }
    }
  }
};

inline Movement movement_from_string(const std::string & s)
{
  if (s == "straight") return Movement::kStraight;
  if (s == "left") return Movement::kLeft;
  if (s == "right") return Movement::kRight;
  throw SchemaError("unknown movement: " + s);
}

inline void check_keys(
  const nlohmann::json & j, const std::vector<std::string> & allowed, const std::string & where)
{
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw SchemaError("unknown key in " + where + ": " + it.key());
    }
  }
}

inline ScenarioConfig scenario_config_from_json(const nlohmann::json & j)
{
  if (!j.is_object()) throw SchemaError("scenario config must be a JSON object");
  check_keys(
    j,
    {"duration_s", "tick_s", "spawn_rate_per_arm", "route_mix", "speed_limit_mps",
     "ignore_priority_fraction", "seed", "lanes_per_approach", "arm_length", "lane_width",
     "corner_setback", "vehicle_length", "vehicle_width", "desired_speed_factor", "idm",
     "scripted", "scripted_only"},
    "scenario config");
  ScenarioConfig c;
  if (j.contains("duration_s")) c.duration_s = j.at("duration_s").get<double>();
  if (j.contains("tick_s")) c.tick_s = j.at("tick_s").get<double>();
  if (j.contains("spawn_rate_per_arm")) {
    c.spawn_rate_per_arm = j.at("spawn_rate_per_arm").get<double>();
  }
  if (j.contains("route_mix")) {
    const auto & m = j.at("route_mix");
    check_keys(m, {"straight", "left", "right"}, "route_mix");
    c.route_mix_straight = m.value("straight", 0.0);
    c.route_mix_left = m.value("left", 0.0);
    c.route_mix_right = m.value("right", 0.0);
  }
  if (j.contains("speed_limit_mps")) c.speed_limit_mps = j.at("speed_limit_mps").get<double>();
  if (j.contains("ignore_priority_fraction")) {
    c.ignore_priority_fraction = j.at("ignore_priority_fraction").get<double>();
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("lanes_per_approach")) {
    c.lanes_per_approach = j.at("lanes_per_approach").get<int>();
  }
  if (j.contains("arm_length")) c.arm_length = j.at("arm_length").get<double>();
  if (j.contains("lane_width")) c.lane_width = j.at("lane_width").get<double>();
  if (j.contains("corner_setback")) c.corner_setback = j.at("corner_setback").get<double>();
  if (j.contains("vehicle_length")) c.vehicle_length = j.at("vehicle_length").get<double>();
  if (j.contains("vehicle_width")) c.vehicle_width = j.at("vehicle_width").get<double>();
  if (j.contains("desired_speed_factor")) {
    const auto & f = j.at("desired_speed_factor");
    check_keys(f, {"lo", "hi"}, "desired_speed_factor");
    c.desired_speed_lo = f.value("lo", c.desired_speed_lo);
    c.desired_speed_hi = f.value("hi", c.desired_speed_hi);
  }
  if (j.contains("idm")) {
    const auto & m = j.at("idm");
    check_keys(m, {"max_accel", "comfort_decel", "exponent", "min_gap", "headway"}, "idm");
    c.idm.max_accel = m.value("max_accel", c.idm.max_accel);
    c.idm.comfort_decel = m.value("comfort_decel", c.idm.comfort_decel);
    c.idm.exponent = m.value("exponent", c.idm.exponent);
    c.idm.min_gap = m.value("min_gap", c.idm.min_gap);
    c.idm.headway = m.value("headway", c.idm.headway);
  }
  if (j.contains("scripted")) {
    for (const auto & e : j.at("scripted")) {
      check_keys(
        e, {"time_s", "arm", "movement", "lane", "speed", "ignore_priority", "constant_speed"},
        "scripted spawn");
      ScriptedSpawn sp;
      sp.time_s = e.value("time_s", 0.0);
      sp.arm = e.value("arm", 0);
      sp.movement = movement_from_string(e.value("movement", std::string("straight")));
      sp.lane = e.value("lane", 0);
      sp.speed = e.value("speed", 10.0);
      sp.ignore_priority = e.value("ignore_priority", false);
      sp.constant_speed = e.value("constant_speed", false);
      c.scripted.push_back(sp);
    }
  }
  if (j.contains("scripted_only")) c.scripted_only = j.at("scripted_only").get<bool>();
  c.validate();
  return c;
}

inline nlohmann::json scenario_config_to_json(const ScenarioConfig & c)
{
  nlohmann::json j;
  j["duration_s"] = c.duration_s;
  j["tick_s"] = c.tick_s;
  j["spawn_rate_per_arm"] = c.spawn_rate_per_arm;
  j["route_mix"] = {
    {"straight", c.route_mix_straight}, {"left", c.route_mix_left}, {"right", c.route_mix_right}};
  j["speed_limit_mps"] = c.speed_limit_mps;
  j["ignore_priority_fraction"] = c.ignore_priority_fraction;
  j["seed"] = c.seed;
  j["lanes_per_approach"] = c.lanes_per_approach;
  j["arm_length"] = c.arm_length;
  j["lane_width"] = c.lane_width;
  j["corner_setback"] = c.corner_setback;
  j["vehicle_length"] = c.vehicle_length;
  j["vehicle_width"] = c.vehicle_width;
  j["desired_speed_factor"] = {{"lo", c.desired_speed_lo}, {"hi", c.desired_speed_hi}};
  j["idm"] = {
    {"max_accel", c.idm.max_accel},
    {"comfort_decel", c.idm.comfort_decel},
    {"exponent", c.idm.exponent},
    {"min_gap", c.idm.min_gap},
    {"headway", c.idm.headway}};
  if (!c.scripted.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto & sp : c.scripted) {
      arr.push_back(
        {{"time_s", sp.time_s},
         {"arm", sp.arm},
         {"movement", movement_name(sp.movement)},
         {"lane", sp.lane},
         {"speed", sp.speed},
         {"ignore_priority", sp.ignore_priority},
         {"constant_speed", sp.constant_speed}});
    }
    j["scripted"] = arr;
  }
  j["scripted_only"] = c.scripted_only;
  return j;
}

inline ScenarioConfig load_scenario_config(const std::string & path)
{
  std::ifstream is(path);
  if (!is) throw Error("cannot open for read: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  return scenario_config_from_json(j);
}

inline void write_json_file(const nlohmann::json & j, const std::string & path)
{
  std::ofstream os(path);
  if (!os) throw Error("cannot open for write: " + path);
  os << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::string & path)
{
  std::ifstream is(path);
  if (!is) throw Error("cannot open for read: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception & e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what());
  }
  return j;
}

}  // namespace crossguard

#endif  // CROSSGUARD__TRACE_IO_HPP_
