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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "crossguard/detection.hpp"
#include "crossguard/gaussian.hpp"

namespace cg = crossguard;

namespace
{

cg::VehicleState make_state(int tick, cg::VehicleId id, double x, double y)
{
  cg::VehicleState s;
  s.time_s = 0.1 * tick;
  s.vehicle_id = id;
  s.position = {x, y};
  return s;
}

cg::Trace stationary_trace(
  int ticks, const std::vector<std::pair<cg::VehicleId, cg::Vec2>> & spots)
{
  cg::Trace tr;
  tr.ticks.resize(static_cast<std::size_t>(ticks));
  for (int t = 0; t < ticks; ++t) {
    for (const auto & [id, p] : spots) {
      tr.ticks[static_cast<std::size_t>(t)].push_back(make_state(t, id, p.x(), p.y()));
    }
  }
  return tr;
}

cg::VehiclePrediction constant_prediction(int horizon, cg::Vec2 p, double width)
{
  cg::VehiclePrediction vp;
  vp.point.resize(horizon, 2);
  vp.lower.resize(horizon, 2);
  vp.upper.resize(horizon, 2);
  for (int j = 0; j < horizon; ++j) {
    vp.point(j, 0) = p.y();
    vp.point(j, 1) = p.x();
    vp.lower(j, 0) = p.y() - width / 2.0;
    vp.lower(j, 1) = p.x() - width / 2.0;
    vp.upper(j, 0) = p.y() + width / 2.0;
    vp.upper(j, 1) = p.x() + width / 2.0;
  }
  return vp;
}

// Forest of one leaf tree voting for the positive class regardless of input.
cg::Forest always_positive_forest(int dim)
{
  cg::Forest f;
  f.config.n_trees = 1;
  f.dim = dim;
  cg::TreeNode leaf;
  leaf.w0 = 0.0;
  leaf.w1 = 5.0;
  cg::DecisionTree tree;
  tree.nodes.push_back(leaf);
  f.trees.push_back(tree);
  f.importance = Eigen::VectorXd::Zero(dim);
  return f;
}

// Runs a verdict stream through a fresh debounce; returns fire ticks.
std::vector<int> fire_ticks(const std::vector<bool> & verdicts, int k)
{
  cg::SporadicityConfig cfg;
  cfg.k = k;
  cg::SporadicityState st;
  std::vector<int> out;
  for (std::size_t t = 0; t < verdicts.size(); ++t) {
    if (cg::sporadicity_update(st, verdicts[t], cfg)) {
      out.push_back(static_cast<int>(t));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("sporadicity filter fires on the k-th consecutive positive", "[detect]")
{
  cg::SporadicityConfig cfg;
  cg::SporadicityState st;

  CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
  CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
  CHECK(cg::sporadicity_update(st, true, cfg));
  // Disarmed after firing; the continuing positive run stays silent.
  CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
  CHECK_FALSE(cg::sporadicity_update(st, true, cfg));

  SECTION("nine negatives do not re-arm, ten do")
  {
    for (int i = 0; i < 9; ++i) {
      CHECK_FALSE(cg::sporadicity_update(st, false, cfg));
    }
    CHECK_FALSE(cg::sporadicity_update(st, true, cfg));  // resets the negative run
    CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
    CHECK_FALSE(cg::sporadicity_update(st, true, cfg));  // still disarmed
    for (int i = 0; i < 10; ++i) {
      CHECK_FALSE(cg::sporadicity_update(st, false, cfg));
    }
    CHECK(st.armed);
    CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
    CHECK_FALSE(cg::sporadicity_update(st, true, cfg));
    CHECK(cg::sporadicity_update(st, true, cfg));
  }

  SECTION("a negative restarts the positive run")
  {
    cg::SporadicityState fresh;
    const auto fires = fire_ticks({true, true, false, true, true, true}, 3);
    REQUIRE(fires.size() == 1);
    CHECK(fires[0] == 5);
  }

  SECTION("k of one fires immediately and once per armed episode")
  {
    const auto fires = fire_ticks({true, true, true}, 1);
    REQUIRE(fires.size() == 1);
    CHECK(fires[0] == 0);
  }

  SECTION("configuration bounds")
  {
    cg::SporadicityConfig bad;
    bad.k = 0;
    CHECK_THROWS_AS(bad.validate(), cg::ConfigError);
    bad.k = 3;
    bad.rearm_after = 0;
    CHECK_THROWS_AS(bad.validate(), cg::ConfigError);
  }
}

TEST_CASE("lower debounce thresholds never fire later", "[detect]")
{
  cg::rng::Engine eng = cg::rng::derive(404, 0);
  for (int trial = 0; trial < 60; ++trial) {
    const double p_pos = (trial % 2 == 0) ? 0.5 : 0.2;
    std::vector<bool> stream(200);
    for (std::size_t t = 0; t < stream.size(); ++t) {
      stream[t] = cg::rng::uniform(eng) < p_pos;
    }
    const auto f1 = fire_ticks(stream, 1);
    const auto f3 = fire_ticks(stream, 3);
    CHECK(f1.size() >= f3.size());
    if (!f3.empty()) {
      REQUIRE_FALSE(f1.empty());
      CHECK(f1.front() <= f3.front());
    }
  }
}

TEST_CASE("detection log round trips through line-delimited json", "[detect]")
{
  const auto path =
    (std::filesystem::temp_directory_path() / "cg_detect_log.jsonl").string();

  cg::DetectionLog log;
  log.method = "relative_distance";
  log.records.push_back(cg::DetectionRecord{0, 1, 9, false, 0.25, false});
  log.records.push_back(cg::DetectionRecord{3, 2, 7, true, 0.66, false});
  log.records.push_back(cg::DetectionRecord{4, 2, 7, true, 1.0, true});
  log.save_jsonl(path);

  const cg::DetectionLog back = cg::DetectionLog::load_jsonl(path);
  CHECK(back.method == "relative_distance");
  REQUIRE(back.records.size() == log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    CHECK(back.records[i].tick == log.records[i].tick);
    CHECK(back.records[i].a == log.records[i].a);
    CHECK(back.records[i].b == log.records[i].b);
    CHECK(back.records[i].verdict == log.records[i].verdict);
    CHECK(back.records[i].vote_fraction == log.records[i].vote_fraction);
    CHECK(back.records[i].fired == log.records[i].fired);
  }

  SECTION("one json object per line with exactly the record keys")
  {
    std::ifstream in(path);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      lines += 1;
      const auto j = nlohmann::json::parse(line);
      CHECK(j.size() == 6);
      CHECK(j.contains("tick"));
      CHECK(j.contains("pair"));
      CHECK(j.contains("verdict"));
      CHECK(j.contains("vote_fraction"));
      CHECK(j.contains("fired"));
      CHECK(j.contains("method"));
    }
    CHECK(lines == 3);
  }

  SECTION("rejects mixed methods, unknown keys, and malformed lines")
  {
    {
      std::ofstream out(path);
      out << R"({"fired":false,"method":"a","pair":[1,2],"tick":0,"verdict":true,"vote_fraction":1.0})" << "\n";
      out << R"({"fired":false,"method":"b","pair":[1,2],"tick":1,"verdict":true,"vote_fraction":1.0})" << "\n";
    }
    CHECK_THROWS_AS(cg::DetectionLog::load_jsonl(path), cg::SchemaError);
    {
      std::ofstream out(path);
      out << R"({"fired":false,"method":"a","pair":[1,2],"tick":0,"verdict":true,"vote_fraction":1.0,"extra":0})" << "\n";
    }
    CHECK_THROWS_AS(cg::DetectionLog::load_jsonl(path), cg::SchemaError);
    {
      std::ofstream out(path);
      out << R"({"method":"a","pair":[1,2],"tick":0,"verdict":true,"vote_fraction":1.0})" << "\n";
    }
    CHECK_THROWS_AS(cg::DetectionLog::load_jsonl(path), cg::SchemaError);
    {
      std::ofstream out(path);
      out << "not json\n";
    }
    CHECK_THROWS_AS(cg::DetectionLog::load_jsonl(path), cg::SchemaError);
    CHECK_THROWS_AS(
      cg::DetectionLog::load_jsonl("/nonexistent/detect.jsonl"), cg::ConfigError);
  }

  std::filesystem::remove(path);
}

TEST_CASE("scoring separates hits, misses, and false alarm episodes", "[detect]")
{
  // Center spacings chosen so body-distance buckets are unambiguous for any
  // rectangle orientation: 4 m spacing keeps bodies under 5 m apart, 26 m
  // spacing keeps them beyond 15 m.
  const cg::Trace trace = stationary_trace(
    100,
    {{1, {0.0, 0.0}}, {2, {0.0, 30.0}}, {3, {0.0, 4.0}}, {4, {100.0, 0.0}}});

  std::vector<cg::CollisionEvent> collisions;
  collisions.push_back(cg::CollisionEvent{5.0, 50, 1, 2, cg::CollisionCategory::kSide});
  collisions.push_back(cg::CollisionEvent{7.0, 70, 3, 4, cg::CollisionCategory::kSide});

  cg::DetectionLog log;
  log.method = "test";
  auto fire = [&log](int tick, cg::VehicleId a, cg::VehicleId b) {
    log.records.push_back(cg::DetectionRecord{tick, a, b, true, 1.0, true});
  };
  fire(30, 1, 2);
  fire(40, 1, 2);
  fire(5, 1, 3);
  fire(10, 1, 3);
  fire(14, 1, 3);
  fire(5, 2, 3);
  fire(20, 2, 3);
  fire(80, 3, 4);  // after the (3, 4) collision, so neither hit nor false alarm
  log.records.push_back(cg::DetectionRecord{60, 1, 4, true, 0.7, false});

  const cg::DetectionMetrics m = cg::score_detection(log, collisions, trace);
  CHECK(m.true_positives == 1);
  CHECK(m.false_negatives == 1);
  // (1, 3) merges into one episode; the (2, 3) alarms sit 15 ticks apart.
  CHECK(m.false_positives == 3);
  REQUIRE(m.reaction_times_s.size() == 1);
  CHECK(m.reaction_times_s[0] == Catch::Approx(2.0));
  REQUIRE(m.fp_min_body_m.size() == 3);
  CHECK(m.fp_body_buckets[0] == 1);
  CHECK(m.fp_body_buckets[1] == 0);
  CHECK(m.fp_body_buckets[2] == 0);
  CHECK(m.fp_body_buckets[3] == 2);

  SECTION("metrics serialize")
  {
    const nlohmann::json j = m.to_json();
    CHECK(j.at("true_positives").get<int>() == 1);
    CHECK(j.at("fp_body_buckets").at(3).get<int>() == 2);
    CHECK(j.at("reaction_times_s").size() == 1);
  }
}

TEST_CASE("episode merging joins alarms under one second apart", "[detect]")
{
  const cg::Trace trace =
    stationary_trace(40, {{1, {0.0, 0.0}}, {2, {0.0, 4.0}}});
  const std::vector<cg::CollisionEvent> none;

  cg::DetectionLog log;
  log.method = "test";
  log.records.push_back(cg::DetectionRecord{5, 1, 2, true, 1.0, true});
  log.records.push_back(cg::DetectionRecord{15, 1, 2, true, 1.0, true});
  CHECK(cg::score_detection(log, none, trace).false_positives == 1);

  log.records[1].tick = 16;  // eleven ticks apart, a full second of silence
  CHECK(cg::score_detection(log, none, trace).false_positives == 2);

  CHECK(cg::episode_merge_gap_ticks(0.1) == 10);
}

TEST_CASE("debounce threshold monotonicity carries through scoring", "[detect]")
{
  const cg::Trace trace =
    stationary_trace(200, {{1, {0.0, 0.0}}, {2, {0.0, 4.0}}});
  cg::rng::Engine eng = cg::rng::derive(808, 0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<bool> stream(200);
    for (std::size_t t = 0; t < stream.size(); ++t) {
      stream[t] = cg::rng::uniform(eng) < 0.3;
    }
    const int t_col =
      20 + static_cast<int>(cg::rng::uniform_index(eng, 160));
    std::vector<cg::CollisionEvent> collisions;
    collisions.push_back(
      cg::CollisionEvent{0.1 * t_col, t_col, 1, 2, cg::CollisionCategory::kSide});

    auto score_with_k = [&](int k) {
      cg::DetectionLog log;
      log.method = "test";
      const auto fires = fire_ticks(stream, k);
      for (int t : fires) {
        log.records.push_back(cg::DetectionRecord{t, 1, 2, true, 1.0, true});
      }
      return cg::score_detection(log, collisions, trace);
    };
    const cg::DetectionMetrics m1 = score_with_k(1);
    const cg::DetectionMetrics m3 = score_with_k(3);
    CHECK(m1.true_positives >= m3.true_positives);
    CHECK(m1.false_negatives <= m3.false_negatives);
  }
}

TEST_CASE("forest detection walks the gated pairs deterministically", "[detect]")
{
  const int horizon = 2;
  const cg::IntersectionLayout layout = cg::IntersectionLayout::make();
  const double k_scale = cg::k_epsilon(0.1, 0.9);
  const cg::Forest forest = always_positive_forest(cg::pair_chi_dim(horizon));

  const cg::Trace trace = stationary_trace(
    8, {{1, {0.0, 0.0}}, {2, {10.0, 0.0}}, {3, {200.0, 0.0}}});

  cg::PredictionSet preds;
  preds.input_len = 1;
  preds.horizon_len = horizon;
  for (int t = 0; t < 8; ++t) {
    preds.by_vehicle[1][t] = constant_prediction(horizon, {0.0, 0.0}, 1.0);
    if (t >= 1) {
      preds.by_vehicle[2][t] = constant_prediction(horizon, {10.0, 0.0}, 1.0);
    }
    preds.by_vehicle[3][t] = constant_prediction(horizon, {200.0, 0.0}, 1.0);
  }

  const cg::DetectionLog log =
    cg::run_detection(trace, preds, forest, layout, k_scale);
  CHECK(log.method == "random_forest");
  CHECK(log.horizon_len == horizon);

  // Only (1, 2) sits inside 50 m; vehicle 2 lacks a tick-0 prediction.
  REQUIRE(log.records.size() == 7);
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const cg::DetectionRecord & r = log.records[i];
    CHECK(r.tick == static_cast<int>(i) + 1);
    CHECK(r.a == 1);
    CHECK(r.b == 2);
    CHECK(r.verdict);
    CHECK(r.vote_fraction == 1.0);
    CHECK(r.fired == (r.tick == 3));  // third consecutive positive
  }

  SECTION("identical reruns")
  {
    const cg::DetectionLog again =
      cg::run_detection(trace, preds, forest, layout, k_scale);
    REQUIRE(again.records.size() == log.records.size());
    for (std::size_t i = 0; i < log.records.size(); ++i) {
      CHECK(again.records[i].tick == log.records[i].tick);
      CHECK(again.records[i].a == log.records[i].a);
      CHECK(again.records[i].b == log.records[i].b);
      CHECK(again.records[i].vote_fraction == log.records[i].vote_fraction);
      CHECK(again.records[i].fired == log.records[i].fired);
    }
  }

  SECTION("gating bounds the classified set")
  {
    cg::DetectionConfig tight;
    tight.gating_m = 5.0;
    CHECK(
      cg::run_detection(trace, preds, forest, layout, k_scale, tight)
        .records.empty());

    cg::DetectionConfig wide;
    wide.gating_m = 1000.0;
    const cg::DetectionLog all =
      cg::run_detection(trace, preds, forest, layout, k_scale, wide);
    CHECK(all.records.size() == 22);  // 7 + 8 + 7 pair ticks
    CHECK(all.alarms().size() == 3);  // each pair fires exactly once
  }

  SECTION("horizon mismatch is rejected")
  {
    const cg::Forest wrong = always_positive_forest(cg::pair_chi_dim(3));
    CHECK_THROWS_AS(
      cg::run_detection(trace, preds, wrong, layout, k_scale),
      cg::ContractError);
  }
}
