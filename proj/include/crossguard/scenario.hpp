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

#ifndef CROSSGUARD__SCENARIO_HPP_
#define CROSSGUARD__SCENARIO_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "crossguard/idm.hpp"
#include "crossguard/layout.hpp"
#include "crossguard/trace.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

struct VehicleMeta
{
  VehicleId id = 0;
  int route_index = 0;
  bool ignore_priority = false;
  bool constant_speed = false;
  double desired_speed = 0.0;
  int spawn_tick = 0;
};

struct ScenarioOutput
{
  IntersectionLayout layout;
  Trace trace;
  std::vector<VehicleMeta> metas;
};

/// Synthetic intersection traffic.
///
/// Vehicles follow fixed routes with IDM longitudinal control. A first-come
/// first-served reservation of the conflict region keeps compliant drivers
/// apart; a configured fraction of drivers skips the reservation entirely and
/// sails through, which is the collision injection mechanism. Whether an
/// approaching compliant driver yields depends on reservation state that is
/// not observable from kinematics, so approaches with identical history can
/// either stop or continue.
///
/// Bodies pass through each other on contact; trajectories are never altered
/// by a collision.
class ScenarioGenerator
{
public:
  explicit ScenarioGenerator(const ScenarioConfig & cfg) : cfg_(cfg)
  {
    cfg_.validate();
    layout_ = IntersectionLayout::make(
      cfg_.lanes_per_approach, cfg_.arm_length, cfg_.lane_width, cfg_.corner_setback,
      cfg_.vehicle_length, cfg_.vehicle_width);
  }

  ScenarioOutput run()
  {
    const double tau = cfg_.tick_s;
    const int tick_count = static_cast<int>(std::llround(cfg_.duration_s / tau));
    Trace trace;
    trace.tick_s = tau;
    trace.ticks.resize(tick_count);

    for (int arm = 0; arm < 4; ++arm) {
      arm_eng_[arm] = rng::derive(cfg_.seed, 10 + arm);
      next_arrival_[arm] = cfg_.scripted_only || cfg_.spawn_rate_per_arm <= 0.0
                             ? std::numeric_limits<double>::infinity()
                             : exp_draw(arm_eng_[arm]) / cfg_.spawn_rate_per_arm;
    }
    std::vector<ScriptedSpawn> scripted = cfg_.scripted;
    std::stable_sort(scripted.begin(), scripted.end(), [](const auto & a, const auto & b) {
      return a.time_s < b.time_s;
    });
    std::size_t scripted_next = 0;
    std::deque<ScriptedSpawn> scripted_due;

    std::vector<VehicleMeta> metas;

    for (int t = 0; t < tick_count; ++t) {
      const double now = t * tau;

      while (scripted_next < scripted.size() && scripted[scripted_next].time_s <= now + 1e-9) {
        scripted_due.push_back(scripted[scripted_next++]);
      }
      for (std::size_t n = scripted_due.size(); n > 0; --n) {
        const ScriptedSpawn sp = scripted_due.front();
        scripted_due.pop_front();
        if (!try_spawn_scripted(sp, t, metas)) scripted_due.push_back(sp);
      }

      for (int arm = 0; arm < 4; ++arm) {
        while (next_arrival_[arm] <= now) {
          pending_[arm].push_back(draw_arrival(arm));
          next_arrival_[arm] += exp_draw(arm_eng_[arm]) / cfg_.spawn_rate_per_arm;
        }
        while (!pending_[arm].empty() && try_spawn_random(arm, pending_[arm].front(), t, metas)) {
          pending_[arm].pop_front();
        }
      }

      std::vector<VehicleState> rows(actives_.size());
      for (std::size_t i = 0; i < actives_.size(); ++i) {
        rows[i] = make_state(actives_[i], now);
      }

      update_reservation();

      std::vector<double> accel(actives_.size(), 0.0);
      for (std::size_t i = 0; i < actives_.size(); ++i) {
        accel[i] = decide_accel(i, rows);
      }
      for (std::size_t i = 0; i < actives_.size(); ++i) {
        Active & a = actives_[i];
        const double v_next = std::max(0.0, a.v + accel[i] * tau);
        rows[i].accel = (v_next - a.v) / tau;
        a.s += 0.5 * (a.v + v_next) * tau;
        a.v = v_next;
      }
      trace.ticks[t] = std::move(rows);

      actives_.erase(
        std::remove_if(
          actives_.begin(), actives_.end(),
          [this](const Active & a) { return a.s >= route(a).path.length(); }),
        actives_.end());
    }
    return ScenarioOutput{layout_, std::move(trace), std::move(metas)};
  }

private:
  struct Pending
  {
    Movement movement = Movement::kStraight;
    int lane = 0;
    double desired_v = 0.0;
    bool ignorer = false;
  };

  struct Active
  {
    VehicleId id = 0;
    int route_idx = 0;
    double s = 0.0;
    double v = 0.0;
    double desired_v = 0.0;
    bool ignorer = false;
    bool constant_speed = false;
    bool requested = false;
    bool granted = false;
    long request_order = -1;
  };

  static double exp_draw(rng::Engine & g) { return -std::log(1.0 - rng::uniform(g)); }

  const RouteSpec & route(const Active & a) const { return layout_.routes[a.route_idx]; }

  Pending draw_arrival(int arm)
  {
    Pending p;
    rng::Engine & g = arm_eng_[arm];
    const double u = rng::uniform(g);
    if (u < cfg_.route_mix_straight) {
      p.movement = Movement::kStraight;
      p.lane = static_cast<int>(rng::uniform_index(g, cfg_.lanes_per_approach));
    } else if (u < cfg_.route_mix_straight + cfg_.route_mix_left) {
      p.movement = Movement::kLeft;
      p.lane = cfg_.lanes_per_approach - 1;
    } else {
      p.movement = Movement::kRight;
      p.lane = 0;
    }
    p.desired_v = cfg_.speed_limit_mps * rng::uniform(g, cfg_.desired_speed_lo, cfg_.desired_speed_hi);
    p.ignorer = rng::uniform(g) < cfg_.ignore_priority_fraction;
    return p;
  }

  /// Nearest occupied arc length on the approach lane, or +inf.
  double entry_headroom(int arm, int lane) const
  {
    double min_s = std::numeric_limits<double>::infinity();
    for (const auto & a : actives_) {
      const RouteSpec & r = route(a);
      if (r.approach_arm == arm && r.approach_lane == lane && a.s < r.box_exit_s) {
        min_s = std::min(min_s, a.s);
      }
    }
    return min_s;
  }

  bool try_spawn_random(int arm, const Pending & p, int tick, std::vector<VehicleMeta> & metas)
  {
    const double head = entry_headroom(arm, p.lane);
    if (head < cfg_.vehicle_length + cfg_.idm.min_gap + 2.0) return false;
    Active a;
    a.id = next_id_++;
    a.route_idx = layout_.route_index(arm, p.movement, p.lane);
    a.desired_v = p.desired_v;
    const double gap0 = head - cfg_.vehicle_length - cfg_.idm.min_gap;
    const double v_cap =
      std::isfinite(gap0) ? std::sqrt(std::max(0.0, 2.0 * cfg_.idm.comfort_decel * gap0))
                          : p.desired_v;
    a.v = std::min(p.desired_v, v_cap);
    a.ignorer = p.ignorer;
    actives_.push_back(a);
    metas.push_back({a.id, a.route_idx, a.ignorer, false, a.desired_v, tick});
    return true;
  }

  bool try_spawn_scripted(const ScriptedSpawn & sp, int tick, std::vector<VehicleMeta> & metas)
  {
    const double head = entry_headroom(sp.arm, sp.lane);
    if (head < cfg_.vehicle_length + cfg_.idm.min_gap + 2.0) return false;
    Active a;
    a.id = next_id_++;
    a.route_idx = layout_.route_index(sp.arm, sp.movement, sp.lane);
    a.desired_v = sp.speed;
    a.v = sp.speed;
    a.ignorer = sp.ignore_priority || sp.constant_speed;
    a.constant_speed = sp.constant_speed;
    actives_.push_back(a);
    metas.push_back({a.id, a.route_idx, a.ignorer, a.constant_speed, a.desired_v, tick});
    return true;
  }

  VehicleState make_state(const Active & a, double now) const
  {
    const RouteSpec & r = route(a);
    VehicleState s;
    s.time_s = now;
    s.vehicle_id = a.id;
    s.position = r.path.position(a.s);
    s.heading_deg = r.path.heading_deg(a.s);
    s.speed = a.v;
    s.accel = 0.0;
    if (a.s <= r.box_exit_s) {
      s.edge_index = r.approach_edge;
      s.lane_index = r.approach_lane;
    } else {
      s.edge_index = r.exit_edge;
      s.lane_index = r.exit_lane;
    }
    s.length = cfg_.vehicle_length;
    s.width = cfg_.vehicle_width;
    return s;
  }

  void update_reservation()
  {
    // A transit is over once the tail clears the region, not the bumper.
    const double tail = cfg_.vehicle_length;
    for (auto & a : actives_) {
      if (a.granted && a.s > route(a).box_exit_s + tail) a.granted = false;
    }
    for (auto & a : actives_) {
      if (a.ignorer || a.requested) continue;
      const RouteSpec & r = route(a);
      if (a.s >= r.box_entry_s - kRequestDistance) {
        a.requested = true;
        a.request_order = request_seq_++;
      }
    }
    // Blockers: holders of a live grant plus anything physically past the stop
    // line, compliant or not. Vehicles waiting at the line are not blockers.
    std::vector<int> blocker_routes;
    for (const auto & a : actives_) {
      const RouteSpec & r = route(a);
      const bool inside = a.s > r.box_entry_s && a.s <= r.box_exit_s + tail;
      if ((a.granted && a.s <= r.box_exit_s + tail) || inside) {
        blocker_routes.push_back(a.route_idx);
      }
    }
    // Grants are only handed out close to the line so a slot is never pinned
    // by a vehicle still far up the approach.
    std::vector<Active *> queue;
    for (auto & a : actives_) {
      if (
        a.requested && !a.granted && !a.ignorer && a.s < route(a).box_entry_s &&
        a.s >= route(a).box_entry_s - kGrantWindow) {
        queue.push_back(&a);
      }
    }
    std::sort(queue.begin(), queue.end(), [](const Active * x, const Active * y) {
      return x->request_order < y->request_order;
    });
    for (Active * a : queue) {
      bool clear = true;
      for (int rb : blocker_routes) {
        if (layout_.conflict[a->route_idx][rb]) {
          clear = false;
          break;
        }
      }
      if (clear) {
        a->granted = true;
        blocker_routes.push_back(a->route_idx);
      }
    }
  }

  double decide_accel(std::size_t i, const std::vector<VehicleState> & rows) const
  {
    const Active & a = actives_[i];
    if (a.constant_speed) return 0.0;
    const RouteSpec & r = route(a);
    double v0 = a.desired_v;
    if (r.turn_radius > 0.0) {
      const double v_turn = std::sqrt(kTurnLateralAccel * r.turn_radius);
      if (a.s < r.box_entry_s) {
        const double v_allow = std::sqrt(
          v_turn * v_turn + 2.0 * cfg_.idm.comfort_decel * (r.box_entry_s - a.s));
        v0 = std::min(v0, v_allow);
      } else if (a.s <= r.box_exit_s) {
        v0 = std::min(v0, v_turn);
      }
    }
    double acc;
    const int lead = preceding_index(rows, i);
    if (lead >= 0) {
      const Vec2 dir = heading_dir(rows[i].heading_deg);
      const double proj = (rows[lead].position - rows[i].position).dot(dir);
      const double gap = proj - rows[lead].length;
      acc = idm_accel(cfg_.idm, a.v, v0, gap, rows[lead].speed);
    } else {
      acc = idm_free_accel(cfg_.idm, a.v, v0);
    }
    if (!a.ignorer && !a.granted && a.s < r.box_entry_s) {
      const double stop_s = r.box_entry_s + cfg_.idm.min_gap - 0.5;
      acc = std::min(acc, idm_accel(cfg_.idm, a.v, v0, stop_s - a.s, 0.0));
    }
    return std::clamp(acc, -kMaxBrake, cfg_.idm.max_accel);
  }

  static constexpr double kRequestDistance = 45.0;
  static constexpr double kGrantWindow = 22.0;
  static constexpr double kTurnLateralAccel = 3.0;
  static constexpr double kMaxBrake = 8.0;

  ScenarioConfig cfg_;
  IntersectionLayout layout_;
  rng::Engine arm_eng_[4];
  double next_arrival_[4] = {0.0, 0.0, 0.0, 0.0};
  std::deque<Pending> pending_[4];
  std::vector<Active> actives_;
  VehicleId next_id_ = 1;
  long request_seq_ = 0;
};

inline ScenarioOutput generate_scenario(const ScenarioConfig & cfg)
{
  return ScenarioGenerator(cfg).run();
}

}  // namespace crossguard

#endif  // CROSSGUARD__SCENARIO_HPP_
