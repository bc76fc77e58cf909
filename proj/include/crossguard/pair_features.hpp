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

#ifndef CROSSGUARD__PAIR_FEATURES_HPP_
#define CROSSGUARD__PAIR_FEATURES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "crossguard/gaussian.hpp"
#include "crossguard/layout.hpp"
#include "crossguard/predictions.hpp"
#include "crossguard/tensor_store.hpp"
#include "crossguard/trace.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

/// Distance calibration for labeling and the distance-rule detectors: the
/// 0.9-quantile (nearest rank) of per-colliding-pair minimum true distance.
struct DistanceThresholds
{
  double d_c = 0.0;    // meters
  double d2_c = 0.0;   // m^2
  double quantile = 0.9;
  std::uint64_t provenance = 0;  // hash of the per-pair minima
};

namespace detail
{

inline std::uint64_t fnv1a_doubles(const std::vector<double> & xs)
{
  std::uint64_t h = 1469598103934665603ull;
  for (const double x : xs) {
    const auto * bytes = reinterpret_cast<const unsigned char *>(&x);
    for (std::size_t i = 0; i < sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace detail

/// Nearest-rank quantile: the ceil(q n)-th smallest value.
inline double nearest_rank_quantile(std::vector<double> xs, double q)
{
  if (xs.empty()) throw ContractError("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const auto rank = static_cast<std::size_t>(
    std::ceil(q * static_cast<double>(xs.size())));
  return xs[std::max<std::size_t>(rank, 1) - 1];
}

inline DistanceThresholds compute_distance_thresholds(
  const Trace & trace, const std::vector<std::pair<VehicleId, VehicleId>> & colliding_pairs,
  double quantile = 0.9)
{
  std::vector<double> mins;
  for (const auto & [a, b] : colliding_pairs) {
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trace.tick_count(); ++t) {
      const VehicleState * sa = trace.find(t, a);
      const VehicleState * sb = trace.find(t, b);
      if (sa == nullptr || sb == nullptr) continue;
      best = std::min(best, (sa->position - sb->position).norm());
    }
    if (std::isfinite(best)) mins.push_back(best);
  }
  if (mins.empty()) {
    throw TrainingError("no colliding pairs to calibrate distance thresholds");
  }
  DistanceThresholds out;
  out.quantile = quantile;
  out.d_c = nearest_rank_quantile(mins, quantile);
  std::vector<double> sq = mins;
  for (auto & v : sq) v *= v;
  out.d2_c = nearest_rank_quantile(sq, quantile);
  std::sort(mins.begin(), mins.end());
  out.provenance = detail::fnv1a_doubles(mins);
  return out;
}

/// Per-step feature block of a pair vector: both predicted positions, both
/// snapped road directions, distance statistics, both interval widths, and
/// both variance diagonals. One block per future step, concatenated.
constexpr int kPairBlock = 16;

inline const std::array<const char *, kPairBlock> & pair_feature_kind_names()
{
  static const std::array<const char *, kPairBlock> names{
    "pos_a_lat", "pos_a_lon", "pos_b_lat", "pos_b_lon",
    "road_dir_a", "road_dir_b",
    "distance", "expected_sq_distance",
    "width_a_lat", "width_a_lon", "width_b_lat", "width_b_lon",
    "var_a_lat", "var_a_lon", "var_b_lat", "var_b_lon"};
  return names;
}

inline int pair_chi_dim(int horizon_len) { return kPairBlock * horizon_len; }

/// One classifier example: the unordered pair (a < b) at one tick.
struct PairSample
{
  VehicleId a = 0;
  VehicleId b = 0;
  int tick = 0;
  int label = 0;
  Eigen::VectorXd chi;
};

struct PairDataset
{
  int horizon_len = 0;
  int chi_dim = 0;
  double gating_m = 50.0;
  double k_scale = 0.0;
  DistanceThresholds thresholds;
  std::vector<PairSample> samples;

  Eigen::MatrixXd feature_matrix() const
  {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(samples.size()), chi_dim);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = samples[i].chi.transpose();
    }
    return x;
  }

  Eigen::VectorXi labels() const
  {
    Eigen::VectorXi y(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      y(static_cast<Eigen::Index>(i)) = samples[i].label;
    }
    return y;
  }

  void save(const std::filesystem::path & dir) const
  {
    std::filesystem::create_directories(dir);
    TensorStore store;
    store.put("chi", feature_matrix());
    Eigen::MatrixXd meta_cols(static_cast<Eigen::Index>(samples.size()), 4);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      meta_cols(r, 0) = static_cast<double>(samples[i].a);
      meta_cols(r, 1) = static_cast<double>(samples[i].b);
      meta_cols(r, 2) = static_cast<double>(samples[i].tick);
      meta_cols(r, 3) = static_cast<double>(samples[i].label);
    }
    store.put("pair_tick_label", meta_cols);
    store.save((dir / "tensors.bin").string());

    nlohmann::json meta;
    meta["kind"] = "pair_dataset";
    meta["horizon_len"] = horizon_len;
    meta["chi_dim"] = chi_dim;
    meta["gating_m"] = gating_m;
    meta["k_scale"] = k_scale;
    meta["d_c"] = thresholds.d_c;
    meta["d2_c"] = thresholds.d2_c;
    meta["quantile"] = thresholds.quantile;
    meta["provenance"] = thresholds.provenance;
    meta["count"] = samples.size();
    write_json_file(meta, (dir / "meta.json").string());
  }

  static PairDataset load(const std::filesystem::path & dir)
  {
    const auto meta = read_json_file((dir / "meta.json").string());
    check_keys(
      meta,
      {"kind", "horizon_len", "chi_dim", "gating_m", "k_scale", "d_c", "d2_c", "quantile",
        "provenance", "count"},
      "pair dataset meta");
    if (meta.at("kind").get<std::string>() != "pair_dataset") {
      throw SchemaError("not a pair dataset directory");
    }
    PairDataset out;
    out.horizon_len = meta.at("horizon_len").get<int>();
    out.chi_dim = meta.at("chi_dim").get<int>();
    out.gating_m = meta.at("gating_m").get<double>();
    out.k_scale = meta.at("k_scale").get<double>();
    out.thresholds.d_c = meta.at("d_c").get<double>();
    out.thresholds.d2_c = meta.at("d2_c").get<double>();
    out.thresholds.quantile = meta.at("quantile").get<double>();
    out.thresholds.provenance = meta.at("provenance").get<std::uint64_t>();

    TensorStore store = TensorStore::load((dir / "tensors.bin").string());
    const Eigen::MatrixXd & chi = store.get("chi");
    const Eigen::MatrixXd & cols = store.get("pair_tick_label");
    if (chi.rows() != cols.rows() ||
      chi.rows() != static_cast<Eigen::Index>(meta.at("count").get<std::size_t>()) ||
      chi.cols() != out.chi_dim) {
      throw SchemaError("pair dataset tensors disagree with meta");
    }
    out.samples.resize(static_cast<std::size_t>(chi.rows()));
    for (Eigen::Index r = 0; r < chi.rows(); ++r) {
      auto & s = out.samples[static_cast<std::size_t>(r)];
      s.a = static_cast<VehicleId>(cols(r, 0));
      s.b = static_cast<VehicleId>(cols(r, 1));
      s.tick = static_cast<int>(cols(r, 2));
      s.label = static_cast<int>(cols(r, 3));
      s.chi = chi.row(r).transpose();
    }
    return out;
  }
};

/// Builds the per-step feature vector for one ordered pair of predictions.
inline Eigen::VectorXd build_pair_chi(
  const VehiclePrediction & pa, const VehiclePrediction & pb,
  const IntersectionLayout & layout, double k_scale)
{
  const int L = static_cast<int>(pa.point.rows());
  Eigen::VectorXd chi(pair_chi_dim(L));
  for (int j = 0; j < L; ++j) {
    const Eigen::Vector2d ya = pa.point.row(j).transpose();
    const Eigen::Vector2d yb = pb.point.row(j).transpose();
    const Eigen::Vector2d wa =
      (pa.upper.row(j) - pa.lower.row(j)).transpose();
    const Eigen::Vector2d wb =
      (pb.upper.row(j) - pb.lower.row(j)).transpose();
    GaussianLocation ga, gb;
    ga.mean = ya;
    gb.mean = yb;
    ga.var = interval_to_covariance(wa, k_scale);
    gb.var = interval_to_covariance(wb, k_scale);

    const int base = kPairBlock * j;
    chi(base + 0) = ya(0);
    chi(base + 1) = ya(1);
    chi(base + 2) = yb(0);
    chi(base + 3) = yb(1);
    // Positions are (lat, lon) = (y, x); the layout works in (x, y).
    chi(base + 4) = static_cast<double>(layout.snap(Vec2{ya(1), ya(0)}).edge_index);
    chi(base + 5) = static_cast<double>(layout.snap(Vec2{yb(1), yb(0)}).edge_index);
    chi(base + 6) = euclidean_distance(ya, yb);
    chi(base + 7) = expected_squared_distance(ga, gb);
    chi(base + 8) = wa(0);
    chi(base + 9) = wa(1);
    chi(base + 10) = wb(0);
    chi(base + 11) = wb(1);
    chi(base + 12) = ga.var(0);
    chi(base + 13) = ga.var(1);
    chi(base + 14) = gb.var(0);
    chi(base + 15) = gb.var(1);
  }
  return chi;
}

/// Builds one labeled sample per (gated pair, tick). A pair is labeled 1 only
/// if it truly collides and, at this tick, the collision lies within the
/// prediction horizon or a predicted distance statistic dips below its
/// calibrated threshold.
inline PairDataset build_pair_dataset(
  const Trace & trace, const std::vector<CollisionEvent> & collisions,
  const PredictionSet & preds, const IntersectionLayout & layout,
  const DistanceThresholds & thresholds, double k_scale, double gating_m = 50.0)
{
  std::map<std::pair<VehicleId, VehicleId>, int> collision_tick;
  for (const auto & ev : collisions) {
    const auto key = std::make_pair(ev.a, ev.b);
    const auto it = collision_tick.find(key);
    if (it == collision_tick.end() || ev.tick < it->second) {
      collision_tick[key] = ev.tick;
    }
  }

  PairDataset out;
  out.horizon_len = preds.horizon_len;
  out.chi_dim = pair_chi_dim(preds.horizon_len);
  out.gating_m = gating_m;
  out.k_scale = k_scale;
  out.thresholds = thresholds;

  const int L = preds.horizon_len;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row = trace.ticks[static_cast<std::size_t>(t)];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const VehiclePrediction * pa = preds.find(row[i].vehicle_id, t);
      if (pa == nullptr) continue;
      for (std::size_t k = i + 1; k < row.size(); ++k) {
        if ((row[i].position - row[k].position).norm() > gating_m) continue;
        const VehiclePrediction * pb = preds.find(row[k].vehicle_id, t);
        if (pb == nullptr) continue;

        PairSample s;
        s.a = row[i].vehicle_id;
        s.b = row[k].vehicle_id;
        s.tick = t;
        s.chi = build_pair_chi(*pa, *pb, layout, k_scale);

        const auto col = collision_tick.find(std::make_pair(s.a, s.b));
        if (col != collision_tick.end()) {
          const bool soon = col->second > t && col->second <= t + L;
          double min_d = std::numeric_limits<double>::infinity();
          double min_e = std::numeric_limits<double>::infinity();
          for (int j = 0; j < L; ++j) {
            min_d = std::min(min_d, s.chi(kPairBlock * j + 6));
            min_e = std::min(min_e, s.chi(kPairBlock * j + 7));
          }
          if (soon || min_d < thresholds.d_c || min_e < thresholds.d2_c) {
            s.label = 1;
          }
        }
        out.samples.push_back(std::move(s));
      }
    }
  }
  return out;
}

}  // namespace crossguard

#endif  // CROSSGUARD__PAIR_FEATURES_HPP_
