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

#ifndef CROSSGUARD__PREDICTIONS_HPP_
#define CROSSGUARD__PREDICTIONS_HPP_

#include <map>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "crossguard/features.hpp"
#include "crossguard/point_model.hpp"
#include "crossguard/quantile_model.hpp"

namespace crossguard
{

/// Everything the detector knows about one vehicle's future at one tick.
struct VehiclePrediction
{
  Eigen::MatrixXd point;  // L x 2 (lat, lon) meters
  Eigen::MatrixXd lower;  // L x 2, crossing-fixed
  Eigen::MatrixXd upper;  // L x 2
};

/// Prediction cache keyed by (vehicle, tick). A vehicle has an entry at every
/// tick at which it has a full observation window.
struct PredictionSet
{
  int input_len = 0;
  int horizon_len = 0;
  std::map<VehicleId, std::map<int, VehiclePrediction>> by_vehicle;

  const VehiclePrediction * find(VehicleId id, int tick) const
  {
    const auto v = by_vehicle.find(id);
    if (v == by_vehicle.end()) return nullptr;
    const auto t = v->second.find(tick);
    if (t == v->second.end()) return nullptr;
    return &t->second;
  }

  std::size_t size() const
  {
    std::size_t n = 0;
    for (const auto & [id, m] : by_vehicle) n += m.size();
    return n;
  }
};

/// Runs all three models over every complete window of every track, batched
/// per track. `only` restricts to a subset of vehicles when non-null.
inline PredictionSet predict_all(
  const std::vector<FeatureTrack> & tracks, const Scaler & scaler, const PointModel & point,
  const QuantileModel & lat_model, const QuantileModel & lon_model,
  const std::set<VehicleId> * only = nullptr)
{
  if (lat_model.axis != Axis::kLat || lon_model.axis != Axis::kLon) {
    throw ContractError("axis models passed in the wrong order");
  }
  const std::uint64_t scaler_fp = nn::scaler_hash(scaler);
  for (const std::uint64_t fp :
    {point.scaler_fingerprint, lat_model.scaler_fingerprint, lon_model.scaler_fingerprint}) {
    if (fp != scaler_fp) {
      throw ContractError("model was trained against a different scaler");
    }
  }
  if (point.input_len != lat_model.input_len || point.input_len != lon_model.input_len ||
    point.horizon_len != lat_model.horizon_len || point.horizon_len != lon_model.horizon_len) {
    throw ContractError("models disagree on window geometry");
  }

  const int T = point.input_len;
  const int L = point.horizon_len;
  PredictionSet out;
  out.input_len = T;
  out.horizon_len = L;

  for (const auto & trk : tracks) {
    if (only != nullptr && only->count(trk.id) == 0) continue;
    const int n = static_cast<int>(trk.feats.rows());
    const int windows = n - T + 1;
    if (windows <= 0) continue;

    const Eigen::MatrixXd std_feats = scaler.standardize(trk.feats);
    std::vector<Eigen::MatrixXd> inputs(
      static_cast<std::size_t>(T), Eigen::MatrixXd(std_feats.cols(), windows));
    for (int t = 0; t < T; ++t) {
      for (int b = 0; b < windows; ++b) {
        inputs[static_cast<std::size_t>(t)].col(b) = std_feats.row(b + t).transpose();
      }
    }

    const auto point_head = point.predict_batch(inputs);
    const auto lat_head = lat_model.predict_batch(inputs);
    const auto lon_head = lon_model.predict_batch(inputs);

    auto & per_tick = out.by_vehicle[trk.id];
    for (int b = 0; b < windows; ++b) {
      VehiclePrediction vp;
      vp.point.resize(L, 2);
      for (int j = 0; j < L; ++j) {
        vp.point(j, 0) = point_head[static_cast<std::size_t>(j)](0, b);
        vp.point(j, 1) = point_head[static_cast<std::size_t>(j)](1, b);
      }
      auto iv = assemble_intervals(lat_head, lon_head, b);
      vp.lower = std::move(iv.lower);
      vp.upper = std::move(iv.upper);
      per_tick.emplace(trk.first_tick + T - 1 + b, std::move(vp));
    }
  }
  return out;
}

}  // namespace crossguard

#endif  // CROSSGUARD__PREDICTIONS_HPP_
