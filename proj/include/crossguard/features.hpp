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

#ifndef CROSSGUARD__FEATURES_HPP_
#define CROSSGUARD__FEATURES_HPP_

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "crossguard/common.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

/// Per-step model input layout. Continuous block, categorical one-hots, then
/// the preceding-vehicle block:
///   [lat, lon, heading, speed, accel, lane one-hot, edge one-hot,
///    preceding lat, preceding lon, preceding speed]
/// lat is the north coordinate (y), lon the east coordinate (x).
struct FeatureLayoutInfo
{
  int lane_card = 1;
  int edge_card = 8;

  int dim() const { return 8 + lane_card + edge_card; }
  int lane_begin() const { return 5; }
  int edge_begin() const { return 5 + lane_card; }
  int preceding_begin() const { return 5 + lane_card + edge_card; }

  bool operator==(const FeatureLayoutInfo & o) const
  {
    return lane_card == o.lane_card && edge_card == o.edge_card;
  }
};

inline constexpr double kVirtualLeaderAhead = 200.0;

/// One-hot encode into a feature row. Out-of-range indices are schema
/// violations in the source trace.
inline void encode_categoricals(
  Eigen::Ref<Eigen::RowVectorXd> row, const FeatureLayoutInfo & info, int lane_index,
  int edge_index)
{
  if (lane_index < 0 || lane_index >= info.lane_card) {
    throw SchemaError("lane_index out of range: " + std::to_string(lane_index));
  }
  if (edge_index < 0 || edge_index >= info.edge_card) {
    throw SchemaError("edge_index out of range: " + std::to_string(edge_index));
  }
  row.segment(info.lane_begin(), info.lane_card).setZero();
  row.segment(info.edge_begin(), info.edge_card).setZero();
  row(info.lane_begin() + lane_index) = 1.0;
  row(info.edge_begin() + edge_index) = 1.0;
}

/// Per-vehicle contiguous feature rows plus the raw positions used as
/// prediction targets. Row r covers tick first_tick + r.
struct FeatureTrack
{
  VehicleId id = 0;
  int first_tick = 0;
  Eigen::MatrixXd feats;  // n x dim, raw units
  Eigen::MatrixXd pos;    // n x 2, columns [lat, lon]
};

/// Builds feature tracks for every vehicle in the trace. The preceding
/// vehicle is resolved per tick on the same edge and lane; when there is
/// none, a virtual leader cruises kVirtualLeaderAhead meters ahead at the
/// vehicle's own speed, which makes the gap features saturate instead of
/// discontinuing.
inline std::vector<FeatureTrack> build_feature_tracks(
  const Trace & trace, const FeatureLayoutInfo & info)
{
  std::map<VehicleId, FeatureTrack> by_id;
  std::map<VehicleId, std::vector<Eigen::RowVectorXd>> rows;
  std::map<VehicleId, int> first_tick;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row_states = trace.ticks[t];
    for (std::size_t i = 0; i < row_states.size(); ++i) {
      const VehicleState & s = row_states[i];
      Eigen::RowVectorXd f(info.dim());
      f(0) = s.position.y();
      f(1) = s.position.x();
      f(2) = s.heading_deg;
      f(3) = s.speed;
      f(4) = s.accel;
      encode_categoricals(f, info, s.lane_index, s.edge_index);
      const int lead = preceding_index(row_states, i);
      const int p = info.preceding_begin();
      if (lead >= 0) {
        const VehicleState & l = row_states[lead];
        f(p) = l.position.y();
        f(p + 1) = l.position.x();
        f(p + 2) = l.speed;
      } else {
        const Vec2 virt = s.position + kVirtualLeaderAhead * heading_dir(s.heading_deg);
        f(p) = virt.y();
        f(p + 1) = virt.x();
        f(p + 2) = s.speed;
      }
      auto it = first_tick.find(s.vehicle_id);
      if (it == first_tick.end()) {
        first_tick[s.vehicle_id] = t;
      } else if (it->second + static_cast<int>(rows[s.vehicle_id].size()) != t) {
        throw ContractError("vehicle track has a tick gap");
      }
      rows[s.vehicle_id].push_back(std::move(f));
    }
  }
  std::vector<FeatureTrack> out;
  out.reserve(rows.size());
  for (auto & [id, rr] : rows) {
    FeatureTrack trk;
    trk.id = id;
    trk.first_tick = first_tick[id];
    trk.feats.resize(static_cast<Eigen::Index>(rr.size()), info.dim());
    trk.pos.resize(static_cast<Eigen::Index>(rr.size()), 2);
    for (std::size_t r = 0; r < rr.size(); ++r) {
      trk.feats.row(static_cast<Eigen::Index>(r)) = rr[r];
      trk.pos(static_cast<Eigen::Index>(r), 0) = rr[r](0);
      trk.pos(static_cast<Eigen::Index>(r), 1) = rr[r](1);
    }
    out.push_back(std::move(trk));
  }
  return out;
}

/// Column-wise standardization fit on training rows only. One-hot columns are
/// passed through untouched; a zero-variance column falls back to scale 1 so
/// standardizing stays invertible.
struct Scaler
{
  Eigen::VectorXd mean;
  Eigen::VectorXd std;
  FeatureLayoutInfo info;

  Eigen::MatrixXd standardize(const Eigen::MatrixXd & raw) const
  {
    Eigen::MatrixXd out = raw;
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out.col(c) = (out.col(c).array() - mean(c)) / std(c);
    }
    return out;
  }

  /// Position block helpers for the model output affine: channel 0 lat,
  /// channel 1 lon.
  double pos_mean(int ch) const { return mean(ch); }
  double pos_std(int ch) const { return std(ch); }
};

inline Scaler fit_scaler(
  const std::vector<FeatureTrack> & tracks, const std::vector<std::size_t> & track_indices,
  const FeatureLayoutInfo & info, int input_len, int horizon_len)
{
  const int dim = info.dim();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  long count = 0;
  for (const std::size_t ti : track_indices) {
    const auto & trk = tracks[ti];
    const long n = trk.feats.rows();
    if (n < input_len + horizon_len) continue;
    // Rows that appear in at least one input window.
    const long usable = n - horizon_len;
    for (long r = 0; r < usable; ++r) {
      sum += trk.feats.row(r).transpose();
      sq += trk.feats.row(r).transpose().cwiseProduct(trk.feats.row(r).transpose());
      ++count;
    }
  }
  if (count == 0) throw TrainingError("no rows available to fit the scaler");
  Scaler sc;
  sc.info = info;
  sc.mean = sum / static_cast<double>(count);
  sc.std.resize(dim);
  for (int c = 0; c < dim; ++c) {
    const double var = sq(c) / static_cast<double>(count) - sc.mean(c) * sc.mean(c);
    sc.std(c) = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  // One-hot block passes through unchanged.
  for (int c = info.lane_begin(); c < info.preceding_begin(); ++c) {
    sc.mean(c) = 0.0;
    sc.std(c) = 1.0;
  }
  return sc;
}

struct SplitAssignment
{
  std::vector<VehicleId> train;
  std::vector<VehicleId> val;
  std::vector<VehicleId> test;

  bool in_train(VehicleId id) const { return contains(train, id); }
  bool in_val(VehicleId id) const { return contains(val, id); }
  bool in_test(VehicleId id) const { return contains(test, id); }

private:
  static bool contains(const std::vector<VehicleId> & v, VehicleId id)
  {
    return std::find(v.begin(), v.end(), id) != v.end();
  }
};

/// Splits vehicles into train/val/test. Vehicles linked by a collision event
/// always land in the same split so a colliding pair is never separated;
/// components are dealt to the split with the largest remaining deficit,
/// largest components first, ties broken train, val, test.
inline SplitAssignment split_by_vehicle(
  const std::vector<VehicleId> & ids, const std::vector<CollisionEvent> & collisions,
  double train_frac, double val_frac, double test_frac, std::uint64_t seed)
{
  if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  std::map<VehicleId, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

  std::vector<std::size_t> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&parent](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto & ev : collisions) {
    const auto ia = index.find(ev.a);
    const auto ib = index.find(ev.b);
    if (ia == index.end() || ib == index.end()) continue;
    parent[find(ia->second)] = find(ib->second);
  }
  std::map<std::size_t, std::vector<VehicleId>> comps;
  for (std::size_t i = 0; i < ids.size(); ++i) comps[find(i)].push_back(ids[i]);

  std::vector<std::vector<VehicleId>> order;
  for (auto & [root, members] : comps) order.push_back(std::move(members));
  auto g = rng::derive(seed, 0x5eed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng::uniform_index(g, i)]);
  }
  std::stable_sort(order.begin(), order.end(), [](const auto & a, const auto & b) {
    return a.size() > b.size();
  });

  const double n = static_cast<double>(ids.size());
  double target[3] = {train_frac * n, val_frac * n, test_frac * n};
  double assigned[3] = {0.0, 0.0, 0.0};
  SplitAssignment out;
  std::vector<VehicleId> * dest[3] = {&out.train, &out.val, &out.test};
  for (const auto & comp : order) {
    int best = 0;
    double best_deficit = -1e18;
    for (int k = 0; k < 3; ++k) {
      const double deficit = target[k] - assigned[k];
      if (deficit > best_deficit + 1e-12) {
        best_deficit = deficit;
        best = k;
      }
    }
    dest[best]->insert(dest[best]->end(), comp.begin(), comp.end());
    assigned[best] += static_cast<double>(comp.size());
  }
  for (int k = 0; k < 3; ++k) std::sort(dest[k]->begin(), dest[k]->end());
  return out;
}

/// A training example: input rows [start, start+input_len) of a track,
/// targets the following horizon_len positions.
struct WindowRef
{
  std::size_t track_idx = 0;
  int start = 0;
};

inline std::vector<WindowRef> enumerate_windows(
  const std::vector<FeatureTrack> & tracks, const std::vector<std::size_t> & track_indices,
  int input_len, int horizon_len, int stride = 1)
{
  if (stride < 1) throw ContractError("window stride must be >= 1");
  std::vector<WindowRef> out;
  for (const std::size_t ti : track_indices) {
    const long n = tracks[ti].feats.rows();
    const long last = n - input_len - horizon_len;
    for (long s = 0; s <= last; s += stride) {
      out.push_back(WindowRef{ti, static_cast<int>(s)});
    }
  }
  return out;
}

inline std::vector<std::size_t> track_indices_for(
  const std::vector<FeatureTrack> & tracks, const std::vector<VehicleId> & ids)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (std::binary_search(ids.begin(), ids.end(), tracks[i].id)) out.push_back(i);
  }
  return out;
}

}  // namespace crossguard

#endif  // CROSSGUARD__FEATURES_HPP_
