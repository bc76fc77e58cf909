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

#ifndef CROSSGUARD__LAYOUT_HPP_
#define CROSSGUARD__LAYOUT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "crossguard/common.hpp"
#include "crossguard/geometry.hpp"

namespace crossguard
{

struct Rect
{
  Vec2 min{0.0, 0.0};
  Vec2 max{0.0, 0.0};

  double area() const { return (max.x() - min.x()) * (max.y() - min.y()); }
  bool contains(const Vec2 & p, double margin = 0.0) const
  {
    return p.x() >= min.x() - margin && p.x() <= max.x() + margin &&
           p.y() >= min.y() - margin && p.y() <= max.y() + margin;
  }
};

enum class Movement : std::uint8_t { kStraight = 0, kLeft = 1, kRight = 2 };

inline const char * movement_name(Movement m)
{
  switch (m) {
    case Movement::kStraight: return "straight";
    case Movement::kLeft: return "left";
    default: return "right";
  }
}

/// Arc-length parameterized curve made of straight and circular pieces.
class Path
{
public:
  struct Segment
  {
    bool is_arc = false;
    // line
    Vec2 p0{0.0, 0.0};
    Vec2 dir{1.0, 0.0};
    // arc; positive sweep turns left
    Vec2 center{0.0, 0.0};
    double radius = 0.0;
    double theta0 = 0.0;
    double sweep = 0.0;
    double length = 0.0;
  };

  void add_line(const Vec2 & p0, const Vec2 & dir, double length)
  {
    Segment s;
    s.p0 = p0;
    s.dir = dir.normalized();
    s.length = length;
    segs_.push_back(s);
    total_ += length;
  }

  void add_arc(const Vec2 & center, double radius, double theta0, double sweep)
  {
    Segment s;
    s.is_arc = true;
    s.center = center;
    s.radius = radius;
    s.theta0 = theta0;
    s.sweep = sweep;
    s.length = radius * std::fabs(sweep);
    segs_.push_back(s);
    total_ += s.length;
  }

  double length() const { return total_; }
  bool empty() const { return segs_.empty(); }

  Vec2 position(double s) const
  {
    const Segment & seg = locate(s);
    if (!seg.is_arc) {
      return seg.p0 + seg.dir * local_;
    }
    const double th = seg.theta0 + std::copysign(local_ / seg.radius, seg.sweep);
    return seg.center + seg.radius * Vec2{std::cos(th), std::sin(th)};
  }

  double heading_deg(double s) const
  {
    const Segment & seg = locate(s);
    if (!seg.is_arc) {
      return wrap_deg(rad2deg(std::atan2(seg.dir.y(), seg.dir.x())));
    }
    const double th = seg.theta0 + std::copysign(local_ / seg.radius, seg.sweep);
    // Tangent is the radial direction rotated +-90 degrees depending on sweep.
    const double tangent = th + (seg.sweep > 0.0 ? kPi / 2.0 : -kPi / 2.0);
    return wrap_deg(rad2deg(tangent));
  }

  double curvature(double s) const
  {
    const Segment & seg = locate(s);
    return seg.is_arc ? 1.0 / seg.radius : 0.0;
  }

private:
  const Segment & locate(double s) const
  {
    double acc = 0.0;
    for (const auto & seg : segs_) {
      if (s <= acc + seg.length || &seg == &segs_.back()) {
        local_ = std::clamp(s - acc, 0.0, seg.length);
        return seg;
      }
      acc += seg.length;
    }
    throw ContractError("Path::locate on empty path");
  }

  std::vector<Segment> segs_;
  double total_ = 0.0;
  mutable double local_ = 0.0;
};

/// One drivable route: approach lane, transit through the conflict region,
/// exit lane.
struct RouteSpec
{
  int approach_arm = 0;
  int approach_lane = 0;
  Movement movement = Movement::kStraight;
  int exit_arm = 0;
  int exit_lane = 0;
  int approach_edge = 0;  // edges 0..3 approach, 4..7 exit
  int exit_edge = 0;
  Path path;
  double box_entry_s = 0.0;  // arc length where the conflict region starts
  double box_exit_s = 0.0;
  double turn_radius = 0.0;  // 0 for straight transits
};

/// Four-way unregulated intersection in local planar meters, x east / y north.
/// Arm k points outward along heading 90k degrees; traffic keeps right.
/// Lane 0 is the curb lane. Right turns run from lane 0, left turns from the
/// innermost lane, straight transits from any lane.
struct IntersectionLayout
{
  int arm_count = 4;
  int lanes_per_approach = 1;
  double arm_length = 150.0;
  double lane_width = 3.2;
  // Stop lines sit this far back from the roadway crossing; the slack is what
  // gives turn arcs a drivable radius.
  double corner_setback = 4.0;
  Rect conflict_region;
  double turn_radius_right = 0.0;
  double turn_radius_left = 0.0;

  std::vector<RouteSpec> routes;
  // Transits whose swept vehicle bodies come close inside the region; such
  // pairs must never be in the region at the same time.
  std::vector<std::vector<bool>> conflict;

  int edge_count() const { return 2 * arm_count; }
  double box_half() const { return lanes_per_approach * lane_width + corner_setback; }

  Vec2 outward(int arm) const
  {
    const double th = deg2rad(90.0 * arm);
    return {std::cos(th), std::sin(th)};
  }

  /// Lateral offset of approach lane i from the arm axis, along the
  /// right-of-approach normal.
  double lane_offset(int lane) const
  {
    return (lanes_per_approach - lane - 0.5) * lane_width;
  }

  Vec2 approach_right(int arm) const
  {
    const Vec2 d = -outward(arm);
    return {d.y(), -d.x()};
  }

  Vec2 approach_lane_start(int arm, int lane) const
  {
    return outward(arm) * (box_half() + arm_length) + approach_right(arm) * lane_offset(lane);
  }

  const RouteSpec & route(int arm, Movement m, int lane) const
  {
    for (const auto & r : routes) {
      if (r.approach_arm == arm && r.movement == m && r.approach_lane == lane) return r;
    }
    throw ContractError("no such route");
  }

  int route_index(int arm, Movement m, int lane) const
  {
    for (std::size_t i = 0; i < routes.size(); ++i) {
      const auto & r = routes[i];
      if (r.approach_arm == arm && r.movement == m && r.approach_lane == lane) {
        return static_cast<int>(i);
      }
    }
    throw ContractError("no such route");
  }

  /// Nearest (edge, lane) for an arbitrary point; used to look up the road
  /// direction of predicted future positions.
  struct Snap
  {
    int edge_index = 0;
    int lane_index = 0;
    double distance = 0.0;
  };

  Snap snap(const Vec2 & p) const
  {
    Snap best;
    best.distance = std::numeric_limits<double>::infinity();
    const double b = box_half();
    for (int arm = 0; arm < arm_count; ++arm) {
      const Vec2 o = outward(arm);
      const Vec2 ra = approach_right(arm);
      for (int lane = 0; lane < lanes_per_approach; ++lane) {
        const double off = lane_offset(lane);
        // approach lane: from outer end to the box edge
        {
          const Vec2 a0 = o * (b + arm_length) + ra * off;
          const Vec2 a1 = o * b + ra * off;
          const double d = point_to_segment(p, a0, a1);
          if (d < best.distance) best = {arm, lane, d};
        }
        // exit lane mirrored across the axis
        {
          const Vec2 e0 = o * b - ra * off;
          const Vec2 e1 = o * (b + arm_length) - ra * off;
          const double d = point_to_segment(p, e0, e1);
          if (d < best.distance) best = {arm_count + arm, lane, d};
        }
      }
    }
    return best;
  }

  static IntersectionLayout make(
    int lanes_per_approach = 1, double arm_length = 150.0, double lane_width = 3.2,
    double corner_setback = 4.0, double body_length = 5.0, double body_width = 1.8)
  {
    IntersectionLayout lay;
    lay.lanes_per_approach = lanes_per_approach;
    lay.arm_length = arm_length;
    lay.lane_width = lane_width;
    lay.corner_setback = corner_setback;
    const double b = lay.box_half();
    lay.conflict_region = Rect{{-b, -b}, {b, b}};
    lay.build_routes();
    lay.build_conflicts(body_length, body_width);
    return lay;
  }

private:
  static double point_to_segment(const Vec2 & p, const Vec2 & a, const Vec2 & b)
  {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 == 0.0 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
  }

  void build_routes()
  {
    const double b = box_half();
    for (int arm = 0; arm < arm_count; ++arm) {
      for (int lane = 0; lane < lanes_per_approach; ++lane) {
        add_route(arm, Movement::kStraight, lane);
      }
      add_route(arm, Movement::kRight, 0);
      add_route(arm, Movement::kLeft, lanes_per_approach - 1);
    }
    for (auto & r : routes) {
      r.box_entry_s = arm_length;
      r.box_exit_s = r.path.length() - arm_length;
      if (r.movement == Movement::kRight) turn_radius_right = r.turn_radius;
      if (r.movement == Movement::kLeft) turn_radius_left = r.turn_radius;
    }
    (void)b;
  }

  void add_route(int arm, Movement m, int lane)
  {
    RouteSpec r;
    r.approach_arm = arm;
    r.approach_lane = lane;
    r.movement = m;
    r.approach_edge = arm;
    const double b = box_half();
    const Vec2 o = outward(arm);
    const Vec2 d_in = -o;
    const Vec2 ra = approach_right(arm);
    const double off = lane_offset(lane);
    const Vec2 start = approach_lane_start(arm, lane);

    if (m == Movement::kStraight) {
      r.exit_arm = (arm + 2) % arm_count;
      r.exit_lane = lane;
      r.path.add_line(start, d_in, 2.0 * (b + arm_length));
    } else {
      r.exit_arm = m == Movement::kRight ? (arm + 1) % arm_count : (arm + 3) % arm_count;
      r.exit_lane = m == Movement::kRight ? 0 : lanes_per_approach - 1;
      const Vec2 o_exit = outward(r.exit_arm);
      const Vec2 re_exit = Vec2{o_exit.y(), -o_exit.x()};
      const double off_exit = lane_offset(r.exit_lane);
      // Tangent points sit where the lane center lines cross the region edge.
      const Vec2 t1 = o * b + ra * off;
      const Vec2 t2 = o_exit * b + re_exit * off_exit;
      const Vec2 n1{-d_in.y(), d_in.x()};
      const Vec2 to_other = t2 - t1;
      const Vec2 n1s = to_other.dot(n1) > 0.0 ? n1 : Vec2(-n1);
      const double radius = std::fabs(to_other.dot(n1s));
      const Vec2 center = t1 + n1s * radius;
      const double th0 = std::atan2(t1.y() - center.y(), t1.x() - center.x());
      const double th1 = std::atan2(t2.y() - center.y(), t2.x() - center.x());
      double sweep = th1 - th0;
      while (sweep > kPi) sweep -= 2.0 * kPi;
      while (sweep < -kPi) sweep += 2.0 * kPi;
      r.turn_radius = radius;
      r.path.add_line(start, d_in, arm_length);
      r.path.add_arc(center, radius, th0, sweep);
      r.path.add_line(t2, o_exit, arm_length);
    }
    r.exit_edge = arm_count + r.exit_arm;
    routes.push_back(std::move(r));
  }

  /// A pair conflicts when the bodies swept along the two transits come within
  /// `clearance` of touching. Bodies hang behind the front bumper, so on tight
  /// arcs the tail sweeps well outside the path; body sampling captures that
  /// where centerline distance would not. Same-arm pairs are excluded: they
  /// share the approach and are kept apart by car-following.
  void build_conflicts(double body_length, double body_width, double clearance = 0.5)
  {
    const double margin = 2.0;
    const double step = 0.5;
    std::vector<std::vector<Obb>> sweep(routes.size());
    for (std::size_t i = 0; i < routes.size(); ++i) {
      const auto & r = routes[i];
      const double hi = r.box_exit_s + body_length + margin;
      for (double s = r.box_entry_s - margin; s <= hi; s += step) {
        sweep[i].push_back(
          Obb::vehicle_body(r.path.position(s), r.path.heading_deg(s), body_length, body_width));
      }
    }
    conflict.assign(routes.size(), std::vector<bool>(routes.size(), false));
    for (std::size_t i = 0; i < routes.size(); ++i) {
      for (std::size_t k = i + 1; k < routes.size(); ++k) {
        if (routes[i].approach_arm == routes[k].approach_arm) continue;
        double dmin = std::numeric_limits<double>::infinity();
        for (const auto & p : sweep[i]) {
          for (const auto & q : sweep[k]) {
            dmin = std::min(dmin, obb_distance(p, q));
            if (dmin == 0.0) break;
          }
          if (dmin == 0.0) break;
        }
        if (dmin < clearance) {
          conflict[i][k] = conflict[k][i] = true;
        }
      }
    }
  }
};

}  // namespace crossguard

#endif  // CROSSGUARD__LAYOUT_HPP_
