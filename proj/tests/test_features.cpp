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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "crossguard/dataset.hpp"
#include "crossguard/features.hpp"
#include "crossguard/scenario.hpp"
#include "crossguard/tensor_store.hpp"

namespace cg = crossguard;

namespace
{

cg::ScenarioConfig scripted_config(double duration)
{
  cg::ScenarioConfig cfg;
  cfg.duration_s = duration;
  cfg.tick_s = 0.1;
  cfg.scripted_only = true;
  cfg.spawn_rate_per_arm = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("feature layout indexes blocks contiguously", "[features]")
{
  cg::FeatureLayoutInfo info;
  info.lane_card = 2;
  info.edge_card = 8;
  CHECK(info.dim() == 18);
  CHECK(info.lane_begin() == 5);
  CHECK(info.edge_begin() == 7);
  CHECK(info.preceding_begin() == 15);

  Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(info.dim(), -1.0);
  cg::encode_categoricals(row, info, 1, 6);
  CHECK(row(5) == 0.0);
  CHECK(row(6) == 1.0);
  for (int e = 0; e < 8; ++e) CHECK(row(7 + e) == (e == 6 ? 1.0 : 0.0));
  CHECK(row(0) == -1.0);
  CHECK(row(15) == -1.0);

  CHECK_THROWS_AS(cg::encode_categoricals(row, info, 2, 0), cg::SchemaError);
  CHECK_THROWS_AS(cg::encode_categoricals(row, info, 0, 8), cg::SchemaError);
}

TEST_CASE("lone vehicle gets a virtual leader dead ahead", "[features]")
{
  auto cfg = scripted_config(4.0);
  cfg.scripted.push_back({0.0, 0, cg::Movement::kStraight, 0, 10.0, false, true});
  const auto out = cg::generate_scenario(cfg);
  cg::FeatureLayoutInfo info;
  info.lane_card = cfg.lanes_per_approach;
  const auto tracks = cg::build_feature_tracks(out.trace, info);
  REQUIRE(tracks.size() == 1);
  const auto & trk = tracks[0];
  REQUIRE(trk.feats.rows() > 10);
  const int p = info.preceding_begin();
  for (long r = 0; r < trk.feats.rows(); ++r) {
    const cg::Vec2 pos{trk.feats(r, 1), trk.feats(r, 0)};
    const cg::Vec2 virt =
      pos + cg::kVirtualLeaderAhead * cg::heading_dir(trk.feats(r, 2));
    CHECK_THAT(trk.feats(r, p), Catch::Matchers::WithinAbs(virt.y(), 1e-9));
    CHECK_THAT(trk.feats(r, p + 1), Catch::Matchers::WithinAbs(virt.x(), 1e-9));
    CHECK_THAT(trk.feats(r, p + 2), Catch::Matchers::WithinAbs(trk.feats(r, 3), 1e-9));
    // Positions mirror the dedicated target matrix.
    CHECK(trk.pos(r, 0) == trk.feats(r, 0));
    CHECK(trk.pos(r, 1) == trk.feats(r, 1));
  }
}

TEST_CASE("follower sees the leader in its preceding block", "[features]")
{
  auto cfg = scripted_config(6.0);
  cfg.scripted.push_back({0.0, 0, cg::Movement::kStraight, 0, 10.0, false, true});
  cfg.scripted.push_back({1.5, 0, cg::Movement::kStraight, 0, 10.0, false, true});
  const auto out = cg::generate_scenario(cfg);
  cg::FeatureLayoutInfo info;
  info.lane_card = cfg.lanes_per_approach;
  const auto tracks = cg::build_feature_tracks(out.trace, info);
  REQUIRE(tracks.size() == 2);
  const auto & leader = tracks[0];
  const auto & follower = tracks[1];
  REQUIRE(leader.id < follower.id);
  const int p = info.preceding_begin();
  int matched = 0;
  for (long r = 0; r < follower.feats.rows(); ++r) {
    const int tick = follower.first_tick + static_cast<int>(r);
    const long lr = tick - leader.first_tick;
    if (lr < 0 || lr >= leader.feats.rows()) continue;
    // Same edge while both are on the approach: leader must be referenced.
    if (follower.feats(r, info.edge_begin()) != 1.0) continue;
    if (leader.feats(lr, info.edge_begin()) != 1.0) continue;
    CHECK_THAT(follower.feats(r, p), Catch::Matchers::WithinAbs(leader.feats(lr, 0), 1e-12));
    CHECK_THAT(
      follower.feats(r, p + 1), Catch::Matchers::WithinAbs(leader.feats(lr, 1), 1e-12));
    CHECK_THAT(
      follower.feats(r, p + 2), Catch::Matchers::WithinAbs(leader.feats(lr, 3), 1e-12));
    ++matched;
  }
  CHECK(matched > 20);
}

TEST_CASE("scaler standardizes continuous columns and freezes one-hots", "[features]")
{
  cg::FeatureLayoutInfo info;
  info.lane_card = 1;
  info.edge_card = 8;
  // Two hand-built tracks; only track 0 is in the training set.
  cg::FeatureTrack a;
  a.id = 1;
  a.feats = Eigen::MatrixXd::Zero(8, info.dim());
  for (int r = 0; r < 8; ++r) {
    a.feats(r, 0) = r;          // lat: mean over first 6 rows = 2.5
    a.feats(r, 3) = 4.0;        // speed: constant, std falls back to 1
    a.feats(r, info.lane_begin()) = 1.0;
    a.feats(r, info.edge_begin()) = 1.0;
  }
  a.pos = a.feats.leftCols(2);
  cg::FeatureTrack b = a;
  b.id = 2;
  b.feats.array() += 100.0;
  std::vector<cg::FeatureTrack> tracks{a, b};

  const auto sc = cg::fit_scaler(tracks, {0}, info, 4, 2);
  // Usable rows are [0, 8 - 2) = 6 rows; lat values 0..5.
  CHECK_THAT(sc.mean(0), Catch::Matchers::WithinAbs(2.5, 1e-12));
  const double var = (2.0 * (2.5 * 2.5 + 1.5 * 1.5 + 0.5 * 0.5)) / 6.0;
  CHECK_THAT(sc.std(0), Catch::Matchers::WithinRel(std::sqrt(var), 1e-9));
  CHECK(sc.mean(3) == 4.0);
  CHECK(sc.std(3) == 1.0);
  CHECK(sc.mean(info.lane_begin()) == 0.0);
  CHECK(sc.std(info.edge_begin()) == 1.0);

  const Eigen::MatrixXd z = sc.standardize(a.feats);
  CHECK_THAT(z(5, 0), Catch::Matchers::WithinRel((5.0 - 2.5) / std::sqrt(var), 1e-9));
  CHECK(z(5, info.lane_begin()) == 1.0);
}

TEST_CASE("vehicle split hits quotas and keeps colliding pairs together", "[features]")
{
  std::vector<cg::VehicleId> ids(100);
  std::iota(ids.begin(), ids.end(), 1u);
  SECTION("singletons split exactly 65/15/20")
  {
    const auto s = cg::split_by_vehicle(ids, {}, 0.65, 0.15, 0.20, 7);
    CHECK(s.train.size() == 65);
    CHECK(s.val.size() == 15);
    CHECK(s.test.size() == 20);
    std::set<cg::VehicleId> all;
    for (auto v : s.train) all.insert(v);
    for (auto v : s.val) all.insert(v);
    for (auto v : s.test) all.insert(v);
    CHECK(all.size() == 100);
    // Same seed reproduces, different seed shuffles.
    const auto s2 = cg::split_by_vehicle(ids, {}, 0.65, 0.15, 0.20, 7);
    CHECK(s2.train == s.train);
    const auto s3 = cg::split_by_vehicle(ids, {}, 0.65, 0.15, 0.20, 8);
    CHECK(s3.train != s.train);
  }
  SECTION("collision partners land in one split")
  {
    std::vector<cg::CollisionEvent> evs;
    evs.push_back({1.0, 10, 4, 9, cg::CollisionCategory::kSide});
    evs.push_back({2.0, 20, 9, 77, cg::CollisionCategory::kSide});
    evs.push_back({3.0, 30, 20, 21, cg::CollisionCategory::kRearEnd});
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = cg::split_by_vehicle(ids, evs, 0.65, 0.15, 0.20, seed);
      const auto where = [&s](cg::VehicleId v) {
        if (s.in_train(v)) return 0;
        if (s.in_val(v)) return 1;
        return 2;
      };
      CHECK(where(4) == where(9));
      CHECK(where(9) == where(77));
      CHECK(where(20) == where(21));
      CHECK(s.train.size() + s.val.size() + s.test.size() == 100);
    }
  }
  SECTION("bad fractions rejected")
  {
    CHECK_THROWS_AS(cg::split_by_vehicle(ids, {}, 0.5, 0.2, 0.2, 1), cg::ConfigError);
  }
}

TEST_CASE("window enumeration counts n - T - L + 1 per track", "[features]")
{
  cg::FeatureLayoutInfo info;
  const auto mk = [&info](int n) {
    cg::FeatureTrack t;
    t.feats = Eigen::MatrixXd::Zero(n, info.dim());
    t.pos = Eigen::MatrixXd::Zero(n, 2);
    return t;
  };
  std::vector<cg::FeatureTrack> tracks{mk(70), mk(59), mk(60)};
  const auto w = cg::enumerate_windows(tracks, {0, 1, 2}, 30, 30);
  // 70 -> 11 windows, 59 -> none, 60 -> exactly one.
  REQUIRE(w.size() == 12);
  CHECK(w[0].track_idx == 0);
  CHECK(w[10].start == 10);
  CHECK(w[11].track_idx == 2);
  CHECK(w[11].start == 0);
  const auto strided = cg::enumerate_windows(tracks, {0}, 30, 30, 5);
  CHECK(strided.size() == 3);  // starts 0, 5, 10
}

TEST_CASE("prepared dataset round trips through its cache", "[features]")
{
  auto cfg = scripted_config(40.0);
  cfg.scripted_only = false;
  cfg.spawn_rate_per_arm = 0.06;
  cfg.seed = 11;
  const auto out = cg::generate_scenario(cfg);
  const auto collisions = cg::detect_ground_truth_collisions(out.trace);
  cg::FeatureLayoutInfo info;
  info.lane_card = cfg.lanes_per_approach;
  const auto ds = cg::prepare_dataset(out.trace, collisions, info, 30, 30, 5);
  REQUIRE(!ds.tracks.empty());
  REQUIRE(!ds.split.train.empty());

  const auto dir = std::filesystem::temp_directory_path() / "cg_dataset_test";
  std::filesystem::remove_all(dir);
  ds.save(dir);
  const auto back = cg::PreparedDataset::load(dir);
  REQUIRE(back.tracks.size() == ds.tracks.size());
  CHECK(back.info == ds.info);
  CHECK(back.input_len == ds.input_len);
  CHECK(back.tick_s == ds.tick_s);
  CHECK(back.split.train == ds.split.train);
  CHECK(back.split.test == ds.split.test);
  CHECK(back.scaler.mean == ds.scaler.mean);
  CHECK(back.scaler.std == ds.scaler.std);
  for (std::size_t i = 0; i < ds.tracks.size(); ++i) {
    CHECK(back.tracks[i].id == ds.tracks[i].id);
    CHECK(back.tracks[i].first_tick == ds.tracks[i].first_tick);
    CHECK(back.tracks[i].feats == ds.tracks[i].feats);
    CHECK(back.tracks[i].pos == ds.tracks[i].pos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("tensor store rejects corrupt files", "[features]")
{
  const auto path = std::filesystem::temp_directory_path() / "cg_store_test.bin";
  cg::TensorStore store;
  store.put("m", Eigen::MatrixXd::Identity(3, 2));
  store.save(path);
  auto back = cg::TensorStore::load(path);
  CHECK(back.get("m") == Eigen::MatrixXd::Identity(3, 2));
  CHECK_THROWS_AS(back.get("absent"), cg::SchemaError);

  // Truncate and corrupt the magic.
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "CGTSxx";
  }
  CHECK_THROWS_AS(cg::TensorStore::load(path), cg::SchemaError);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "NOPE";
  }
  CHECK_THROWS_AS(cg::TensorStore::load(path), cg::SchemaError);
  std::filesystem::remove(path);
}
