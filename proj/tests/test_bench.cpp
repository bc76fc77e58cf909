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
#include <set>
#include <vector>

#include "crossguard/benchmarks.hpp"

namespace cg = crossguard;

namespace
{

double poly_eval(const std::vector<double> & c, double t)
{
  double f = 0.0;
  for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
    f = f * t + c[static_cast<std::size_t>(i)];
  }
  return f;
}

bool has_root_near(const std::vector<double> & roots, double want, double tol)
{
  for (double r : roots) {
    if (std::abs(r - want) <= tol) return true;
  }
  return false;
}

cg::VehicleState kin_state(
  int tick, cg::VehicleId id, double x, double y, double heading_deg,
  double speed, double accel)
{
  cg::VehicleState s;
  s.time_s = 0.1 * tick;
  s.vehicle_id = id;
  s.position = {x, y};
  s.heading_deg = heading_deg;
  s.speed = speed;
  s.accel = accel;
  return s;
}

}  // namespace

TEST_CASE("polynomial roots match factored forms", "[bench]")
{
  const auto quad = cg::polynomial_real_roots({10.0, -7.0, 1.0});
  REQUIRE(quad.size() == 2);
  CHECK(quad[0] == Catch::Approx(2.0).margin(1e-9));
  CHECK(quad[1] == Catch::Approx(5.0).margin(1e-9));

  // (t^2 + 1)(t - 1)(t - 3): the complex pair is discarded.
  const auto quartic = cg::polynomial_real_roots({3.0, -4.0, 4.0, -4.0, 1.0});
  REQUIRE(quartic.size() == 2);
  CHECK(quartic[0] == Catch::Approx(1.0).margin(1e-9));
  CHECK(quartic[1] == Catch::Approx(3.0).margin(1e-9));

  CHECK(cg::polynomial_real_roots({1.0, 0.0, 1.0}).empty());

  // Vanishing leading coefficients reduce the effective degree.
  const auto linear = cg::polynomial_real_roots({-6.0, 1.0, 0.0, 0.0, 0.0});
  REQUIRE(linear.size() == 1);
  CHECK(linear[0] == Catch::Approx(6.0).margin(1e-9));

  CHECK(cg::polynomial_real_roots({0.0, 0.0, 0.0}).empty());
  CHECK(cg::polynomial_real_roots({5.0}).empty());

  // 25 (t - 10)^2: a double root must still be found.
  const auto twin = cg::polynomial_real_roots({2500.0, -500.0, 25.0});
  CHECK(has_root_near(twin, 10.0, 1e-3));
}

TEST_CASE("random polynomials keep root residuals under tolerance", "[bench]")
{
  cg::rng::Engine eng = cg::rng::derive(31, 0);
  int roots_seen = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> c(5);
    for (double & v : c) v = cg::rng::uniform(eng, -5.0, 5.0);
    for (double r : cg::polynomial_real_roots(c)) {
      roots_seen += 1;
      CHECK(std::abs(poly_eval(c, r)) < 1e-6);
    }
  }
  CHECK(roots_seen > 500);
}

TEST_CASE("entry time has closed forms on straight-line approaches", "[bench]")
{
  const cg::Vec2 zero{0.0, 0.0};

  // Gap of 100 m closing at 20 m/s reaches a 4 m radius after 4.8 s.
  const auto head_on =
    cg::first_entry_time({100.0, 0.0}, {-20.0, 0.0}, zero, 4.0, 5.0);
  REQUIRE(head_on.has_value());
  CHECK(*head_on == Catch::Approx(4.8).margin(1e-9));
  CHECK_FALSE(
    cg::first_entry_time({100.0, 0.0}, {-20.0, 0.0}, zero, 4.0, 3.0)
      .has_value());

  // Tangential pass grazing the radius exactly at t = 10.
  const auto graze =
    cg::first_entry_time({4.0, 50.0}, {0.0, -5.0}, zero, 4.0, 12.0);
  REQUIRE(graze.has_value());
  CHECK(*graze == Catch::Approx(10.0).margin(1e-3));
  CHECK_FALSE(
    cg::first_entry_time({4.0, 50.0}, {0.0, -5.0}, zero, 4.0, 3.0)
      .has_value());

  // Pure acceleration: 50 - t^2 = 4 enters at sqrt(46).
  const auto accel =
    cg::first_entry_time({50.0, 0.0}, zero, {-2.0, 0.0}, 4.0, 10.0);
  REQUIRE(accel.has_value());
  CHECK(*accel == Catch::Approx(std::sqrt(46.0)).margin(1e-6));

  // Already inside the radius counts as an immediate entry.
  const auto inside =
    cg::first_entry_time({1.0, 0.0}, {5.0, 0.0}, zero, 4.0, 3.0);
  REQUIRE(inside.has_value());
  CHECK(*inside == 0.0);

  CHECK_THROWS_AS(
    cg::first_entry_time(zero, zero, zero, 0.0, 3.0), cg::ConfigError);
  CHECK_THROWS_AS(
    cg::first_entry_time(zero, zero, zero, 4.0, 0.0), cg::ConfigError);
}

TEST_CASE("entry time is symmetric under frame swap", "[bench]")
{
  cg::rng::Engine eng = cg::rng::derive(32, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const cg::Vec2 dp{cg::rng::uniform(eng, -20.0, 20.0), cg::rng::uniform(eng, -20.0, 20.0)};
    const cg::Vec2 dv{cg::rng::uniform(eng, -10.0, 10.0), cg::rng::uniform(eng, -10.0, 10.0)};
    const cg::Vec2 da{cg::rng::uniform(eng, -3.0, 3.0), cg::rng::uniform(eng, -3.0, 3.0)};
    const auto fwd = cg::first_entry_time(dp, dv, da, 4.0, 3.0);
    const auto rev = cg::first_entry_time(-dp, -dv, -da, 4.0, 3.0);
    REQUIRE(fwd.has_value() == rev.has_value());
    if (fwd.has_value()) {
      CHECK(*fwd == *rev);  // identical polynomial, bitwise equal result
    }
  }
}

TEST_CASE("random kinematics keep entry residuals under tolerance", "[bench]")
{
  cg::rng::Engine eng = cg::rng::derive(33, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const cg::Vec2 dp{cg::rng::uniform(eng, -40.0, 40.0), cg::rng::uniform(eng, -40.0, 40.0)};
    const cg::Vec2 dv{cg::rng::uniform(eng, -15.0, 15.0), cg::rng::uniform(eng, -15.0, 15.0)};
    const cg::Vec2 da{cg::rng::uniform(eng, -3.0, 3.0), cg::rng::uniform(eng, -3.0, 3.0)};
    const std::vector<double> poly = cg::entry_polynomial(dp, dv, da, 4.0);
    for (double r : cg::polynomial_real_roots(poly)) {
      CHECK(std::abs(poly_eval(poly, r)) < 1e-6);
    }
    const auto entry = cg::first_entry_time(dp, dv, da, 4.0, 3.0);
    if (entry.has_value()) {
      CHECK(*entry >= 0.0);
      CHECK(*entry <= 3.0);
    }
  }
}

TEST_CASE("kinematic warning flags a closing pair", "[bench]")
{
  cg::Trace trace;
  trace.ticks.resize(2);
  for (int t = 0; t < 2; ++t) {
    // 30 m apart closing at 20 m/s enters a 4 m radius after 1.3 s.
    trace.ticks[static_cast<std::size_t>(t)].push_back(
      kin_state(t, 1, 0.0, 0.0, 0.0, 10.0, 0.0));
    trace.ticks[static_cast<std::size_t>(t)].push_back(
      kin_state(t, 2, 30.0, 0.0, 180.0, 10.0, 0.0));
    trace.ticks[static_cast<std::size_t>(t)].push_back(
      kin_state(t, 3, 0.0, 200.0, 0.0, 10.0, 0.0));
  }

  const cg::DetectionLog log = cg::ci_cws_detect(trace);
  CHECK(log.method == "ci_cws");
  REQUIRE(log.records.size() == 2);  // vehicle 3 sits outside the gate
  for (const cg::DetectionRecord & r : log.records) {
    CHECK(r.a == 1);
    CHECK(r.b == 2);
    CHECK(r.verdict);
    CHECK(r.fired);  // no debounce on this benchmark
  }

  SECTION("separating pair stays silent")
  {
    cg::Trace apart;
    apart.ticks.resize(1);
    apart.ticks[0].push_back(kin_state(0, 1, 0.0, 0.0, 180.0, 10.0, 0.0));
    apart.ticks[0].push_back(kin_state(0, 2, 30.0, 0.0, 0.0, 10.0, 0.0));
    const cg::DetectionLog quiet = cg::ci_cws_detect(apart);
    REQUIRE(quiet.records.size() == 1);
    CHECK_FALSE(quiet.records[0].verdict);
    CHECK_FALSE(quiet.records[0].fired);
  }
}

TEST_CASE("predicted separation rule is monotone in its threshold", "[bench]")
{
  const int ticks = 30;
  cg::Trace trace;
  trace.ticks.resize(static_cast<std::size_t>(ticks));
  for (int t = 0; t < ticks; ++t) {
    trace.ticks[static_cast<std::size_t>(t)].push_back(
      kin_state(t, 1, 0.0, 0.0, 0.0, 0.0, 0.0));
    trace.ticks[static_cast<std::size_t>(t)].push_back(
      kin_state(t, 2, 0.0, 5.0, 0.0, 0.0, 0.0));
  }

  // Predicted separation widens by 0.2 m per tick, starting from 3 m.
  cg::PredictionSet preds;
  preds.input_len = 1;
  preds.horizon_len = 2;
  for (int t = 0; t < ticks; ++t) {
    cg::VehiclePrediction flat;
    flat.point = Eigen::MatrixXd::Zero(2, 2);
    flat.lower = flat.point;
    flat.upper = flat.point;
    preds.by_vehicle[1][t] = flat;
    cg::VehiclePrediction moving = flat;
    moving.point.col(0).setConstant(3.0 + 0.2 * t);
    moving.lower = moving.point;
    moving.upper = moving.point;
    preds.by_vehicle[2][t] = moving;
  }

  auto alarm_ticks = [&](double d_c) {
    std::set<int> out;
    for (const auto & r : cg::relative_distance_detect(trace, preds, d_c).records) {
      CHECK(r.fired == r.verdict);
      if (r.fired) out.insert(r.tick);
    }
    return out;
  };

  const std::set<int> tight = alarm_ticks(4.0);
  const std::set<int> mid = alarm_ticks(6.0);
  const std::set<int> wide = alarm_ticks(10.0);
  CHECK(tight.size() == 5);   // separations 3.0 through 3.8
  CHECK(mid.size() == 15);
  CHECK(wide.size() == 30);
  CHECK(std::includes(mid.begin(), mid.end(), tight.begin(), tight.end()));
  CHECK(std::includes(wide.begin(), wide.end(), mid.begin(), mid.end()));

  // Consecutive alarms on a pair that never collides merge into one episode.
  const cg::DetectionLog mid_log = cg::relative_distance_detect(trace, preds, 6.0);
  CHECK(cg::score_detection(mid_log, {}, trace).false_positives == 1);

  CHECK_THROWS_AS(
    cg::relative_distance_detect(trace, preds, 0.0), cg::ConfigError);
}
