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

#ifndef CROSSGUARD__GEOMETRY_HPP_
#define CROSSGUARD__GEOMETRY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "crossguard/common.hpp"

namespace crossguard
{

/// Oriented bounding box in the local planar frame.
struct Obb
{
  Vec2 center{0.0, 0.0};
  double half_length = 0.0;  // along the heading axis
  double half_width = 0.0;
  double heading_deg = 0.0;

  /// Box for a vehicle body whose pose is the front-bumper center.
  static Obb vehicle_body(
    const Vec2 & front_bumper, double heading_deg, double length, double width)
  {
    const Vec2 dir = heading_dir(heading_deg);
    return Obb{front_bumper - dir * (0.5 * length), 0.5 * length, 0.5 * width, heading_deg};
  }

  std::array<Vec2, 4> corners() const
  {
    const Vec2 ax = heading_dir(heading_deg);
    const Vec2 ay{-ax.y(), ax.x()};
    const Vec2 dl = ax * half_length;
    const Vec2 dw = ay * half_width;
    return {center + dl + dw, center + dl - dw, center - dl - dw, center - dl + dw};
  }
};

namespace detail
{

struct Interval
{
  double lo, hi;
};

inline Interval project(const std::array<Vec2, 4> & pts, const Vec2 & axis)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto & p : pts) {
    const double v = p.dot(axis);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

inline double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline double segment_segment_distance(
  const Vec2 & a0, const Vec2 & a1, const Vec2 & b0, const Vec2 & b1)
{
  // Proper crossing means distance zero; otherwise the minimum is attained at
  // an endpoint against the opposite segment.
  const auto orient = [](const Vec2 & p, const Vec2 & q, const Vec2 & r) {
    const double v = (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    return (v > 0.0) - (v < 0.0);
  };
  const int o1 = orient(a0, a1, b0);
  const int o2 = orient(a0, a1, b1);
  const int o3 = orient(b0, b1, a0);
  const int o4 = orient(b0, b1, a1);
  if (o1 != o2 && o3 != o4) return 0.0;
  double d = point_segment_distance(b0, a0, a1);
  d = std::min(d, point_segment_distance(b1, a0, a1));
  d = std::min(d, point_segment_distance(a0, b0, b1));
  d = std::min(d, point_segment_distance(a1, b0, b1));
  return d;
}

}  // namespace detail

/// Separating-axis overlap test; touching boxes count as overlapping.
inline bool obb_overlap(const Obb & a, const Obb & b)
{
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 axes[4] = {
    heading_dir(a.heading_deg), heading_dir(a.heading_deg + 90.0),
    heading_dir(b.heading_deg), heading_dir(b.heading_deg + 90.0)};
  for (const auto & axis : axes) {
    const auto ia = detail::project(ca, axis);
    const auto ib = detail::project(cb, axis);
    if (ia.hi < ib.lo || ib.hi < ia.lo) return false;
  }
  return true;
}

/// Minimum distance between two box boundaries; zero when they overlap.
inline double obb_distance(const Obb & a, const Obb & b)
{
  if (obb_overlap(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      best = std::min(
        best, detail::segment_segment_distance(
                ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4]));
    }
  }
  return best;
}

}  // namespace crossguard

#endif  // CROSSGUARD__GEOMETRY_HPP_
