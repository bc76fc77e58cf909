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

#ifndef CROSSGUARD__IDM_HPP_
#define CROSSGUARD__IDM_HPP_

#include <algorithm>
#include <cmath>

#include "crossguard/common.hpp"

namespace crossguard
{

/// Intelligent Driver Model longitudinal controller.
struct IdmParams
{
  double max_accel = 2.0;      // a, m/s^2
  double comfort_decel = 3.0;  // b, m/s^2
  double exponent = 4.0;       // delta
  double min_gap = 2.0;        // s0, m
  double headway = 1.0;        // T, s
};

/// Acceleration for gap `gap` (bumper to bumper, > 0) to a leader moving at
/// `lead_speed`, own speed `v`, free-flow target `v0`.
inline double idm_accel(
  const IdmParams & p, double v, double v0, double gap, double lead_speed)
{
  const double dv = v - lead_speed;
  const double s_star =
    p.min_gap + std::max(0.0, v * p.headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
  const double g = std::max(gap, 0.1);
  const double free_term = v0 > 0.0 ? std::pow(v / v0, p.exponent) : (v > 0.0 ? 1e9 : 0.0);
  return p.max_accel * (1.0 - free_term - (s_star / g) * (s_star / g));
}

/// Free-road acceleration (leader infinitely far away).
inline double idm_free_accel(const IdmParams & p, double v, double v0)
{
  const double free_term = v0 > 0.0 ? std::pow(v / v0, p.exponent) : (v > 0.0 ? 1e9 : 0.0);
  return p.max_accel * (1.0 - free_term);
}

}  // namespace crossguard

#endif  // CROSSGUARD__IDM_HPP_
