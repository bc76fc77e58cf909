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

#ifndef CROSSGUARD__DATASET_HPP_
#define CROSSGUARD__DATASET_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/features.hpp"
#include "crossguard/tensor_store.hpp"
#include "crossguard/trace.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

/// Feature tracks plus the fitted scaler and the vehicle-level split,
/// cached to disk so the training stages never re-derive them.
struct PreparedDataset
{
  FeatureLayoutInfo info;
  int input_len = 30;
  int horizon_len = 30;
  double tick_s = 0.1;
  std::uint64_t split_seed = 1;
  std::vector<FeatureTrack> tracks;
  Scaler scaler;
  SplitAssignment split;

  std::vector<std::size_t> train_tracks() const
  {
    return track_indices_for(tracks, split.train);
  }
  std::vector<std::size_t> val_tracks() const { return track_indices_for(tracks, split.val); }
  std::vector<std::size_t> test_tracks() const { return track_indices_for(tracks, split.test); }

  void save(const std::filesystem::path & dir) const
  {
    std::filesystem::create_directories(dir);
    TensorStore store;
    store.put("scaler_mean", scaler.mean);
    store.put("scaler_std", scaler.std);
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      store.put("track_" + std::to_string(i) + "_feats", tracks[i].feats);
      store.put("track_" + std::to_string(i) + "_pos", tracks[i].pos);
    }
    store.save((dir / "tensors.bin").string());

    nlohmann::json meta;
    meta["lane_card"] = info.lane_card;
    meta["edge_card"] = info.edge_card;
    meta["input_len"] = input_len;
    meta["horizon_len"] = horizon_len;
    meta["tick_s"] = tick_s;
    meta["split_seed"] = split_seed;
    nlohmann::json jt = nlohmann::json::array();
    for (const auto & trk : tracks) {
      jt.push_back({{"id", trk.id}, {"first_tick", trk.first_tick}});
    }
    meta["tracks"] = std::move(jt);
    meta["split"] = {
      {"train", split.train}, {"val", split.val}, {"test", split.test}};
    write_json_file(meta, (dir / "meta.json").string());
  }

  static PreparedDataset load(const std::filesystem::path & dir)
  {
    const nlohmann::json meta = read_json_file((dir / "meta.json").string());
    PreparedDataset ds;
    ds.info.lane_card = meta.at("lane_card").get<int>();
    ds.info.edge_card = meta.at("edge_card").get<int>();
    ds.input_len = meta.at("input_len").get<int>();
    ds.horizon_len = meta.at("horizon_len").get<int>();
    ds.tick_s = meta.at("tick_s").get<double>();
    ds.split_seed = meta.at("split_seed").get<std::uint64_t>();
    ds.split.train = meta.at("split").at("train").get<std::vector<VehicleId>>();
    ds.split.val = meta.at("split").at("val").get<std::vector<VehicleId>>();
    ds.split.test = meta.at("split").at("test").get<std::vector<VehicleId>>();

    const TensorStore store = TensorStore::load((dir / "tensors.bin").string());
    ds.scaler.info = ds.info;
    ds.scaler.mean = store.get("scaler_mean");
    ds.scaler.std = store.get("scaler_std");
    const auto & jt = meta.at("tracks");
    ds.tracks.resize(jt.size());
    for (std::size_t i = 0; i < jt.size(); ++i) {
      ds.tracks[i].id = jt[i].at("id").get<VehicleId>();
      ds.tracks[i].first_tick = jt[i].at("first_tick").get<int>();
      ds.tracks[i].feats = store.get("track_" + std::to_string(i) + "_feats");
      ds.tracks[i].pos = store.get("track_" + std::to_string(i) + "_pos");
    }
    return ds;
  }
};

/// Builds the dataset from a trace: feature tracks, collision-aware vehicle
/// split, and a scaler fitted on training rows.
inline PreparedDataset prepare_dataset(
  const Trace & trace, const std::vector<CollisionEvent> & collisions,
  const FeatureLayoutInfo & info, int input_len, int horizon_len, std::uint64_t split_seed)
{
  PreparedDataset ds;
  ds.info = info;
  ds.input_len = input_len;
  ds.horizon_len = horizon_len;
  ds.tick_s = trace.tick_s;
  ds.split_seed = split_seed;
  ds.tracks = build_feature_tracks(trace, info);
  std::vector<VehicleId> ids;
  ids.reserve(ds.tracks.size());
  for (const auto & trk : ds.tracks) ids.push_back(trk.id);
  ds.split = split_by_vehicle(ids, collisions, 0.65, 0.15, 0.20, split_seed);
  ds.scaler = fit_scaler(ds.tracks, ds.train_tracks(), info, input_len, horizon_len);
  return ds;
}

}  // namespace crossguard

#endif  // CROSSGUARD__DATASET_HPP_
