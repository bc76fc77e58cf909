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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "crossguard/common.hpp"
#include "crossguard/geometry.hpp"

using namespace crossguard;

TEST_CASE("vehicle body hangs behind the front bumper", "[geometry]")
{
  const Obb box = Obb::vehicle_body({10.0, 0.0}, 0.0, 5.0, 1.8);
  CHECK(box.center.x() == Catch::Approx(7.5));
  CHECK(box.center.y() == Catch::Approx(0.0).margin(1e-12));
  const auto corners = box.corners();
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const auto & c : corners) {
    min_x = std::min(min_x, c.x());
    max_x = std::max(max_x, c.x());
    min_y = std::min(min_y, c.y());
    max_y = std::max(max_y, c.y());
  }
  CHECK(min_x == Catch::Approx(5.0));
  CHECK(max_x == Catch::Approx(10.0));
  CHECK(min_y == Catch::Approx(-0.9));
  CHECK(max_y == Catch::Approx(0.9));
}

TEST_CASE("axis-aligned overlap and separation", "[geometry]")
{
  const Obb a{{0.0, 0.0}, 2.5, 0.9, 0.0};
  const Obb b{{4.0, 0.0}, 2.5, 0.9, 0.0};
  CHECK(obb_overlap(a, b));  // centers 4 apart, combined half length 5
  CHECK(obb_distance(a, b) == 0.0);

  const Obb c{{8.0, 0.0}, 2.5, 0.9, 0.0};
  CHECK_FALSE(obb_overlap(a, c));
  CHECK(obb_distance(a, c) == Catch::Approx(3.0));

  const Obb d{{0.0, 1.8}, 2.5, 0.9, 0.0};
  // Touching edges count as contact.
  CHECK(obb_overlap(a, d));
  CHECK(obb_distance(a, d) == 0.0);
}

TEST_CASE("perpendicular crossing overlaps", "[geometry]")
{
  const Obb a{{0.0, 0.0}, 2.5, 0.9, 0.0};
  const Obb b{{0.0, 0.0}, 2.5, 0.9, 90.0};
  CHECK(obb_overlap(a, b));
  const Obb c{{0.0, 5.0}, 2.5, 0.9, 90.0};
  CHECK_FALSE(obb_overlap(a, c));
  // Lateral gap: 5 - 2.5 - 0.9 between the long side of c and short side of a.
  CHECK(obb_distance(a, c) == Catch::Approx(5.0 - 2.5 - 0.9));
}

TEST_CASE("rotated distance against a known diagonal gap", "[geometry]")
{
  const Obb a{{0.0, 0.0}, 1.0, 1.0, 0.0};
  const Obb b{{4.0, 4.0}, std::sqrt(2.0), std::sqrt(2.0), 45.0};
  // b is the diamond with corners (4,2),(6,4),(4,6),(2,4). The nearest pair is
  // the corner (1,1) of a against the edge line x+y=6, met at its foot (3,3).
  const double expected = 4.0 / std::sqrt(2.0);
  CHECK(obb_distance(a, b) == Catch::Approx(expected).epsilon(1e-9));
}

TEST_CASE("distance is symmetric, nonnegative, zero iff overlap", "[geometry]")
{
  auto g = rng::derive(99, 0);
  for (int i = 0; i < 500; ++i) {
    const Obb a{
      {rng::uniform(g, -10.0, 10.0), rng::uniform(g, -10.0, 10.0)},
      rng::uniform(g, 0.5, 3.0),
      rng::uniform(g, 0.3, 1.5),
      rng::uniform(g, 0.0, 360.0)};
    const Obb b{
      {rng::uniform(g, -10.0, 10.0), rng::uniform(g, -10.0, 10.0)},
      rng::uniform(g, 0.5, 3.0),
      rng::uniform(g, 0.3, 1.5),
      rng::uniform(g, 0.0, 360.0)};
    const double dab = obb_distance(a, b);
    const double dba = obb_distance(b, a);
    REQUIRE(dab == Catch::Approx(dba).margin(1e-9));
    REQUIRE(dab >= 0.0);
    REQUIRE((dab == 0.0) == obb_overlap(a, b));
    // Bodies are contained in circles around their centers.
    const double reach_a = std::hypot(a.half_length, a.half_width);
    const double reach_b = std::hypot(b.half_length, b.half_width);
    REQUIRE(dab >= (a.center - b.center).norm() - reach_a - reach_b - 1e-9);
    REQUIRE(dab <= (a.center - b.center).norm() + 1e-9);
  }
}
