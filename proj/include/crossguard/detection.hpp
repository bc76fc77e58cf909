// Copyright 2026 The Crossguard Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CROSSGUARD__DETECTION_HPP_
#define CROSSGUARD__DETECTION_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/common.hpp"
#include "crossguard/forest.hpp"
#include "crossguard/geometry.hpp"
#include "crossguard/layout.hpp"
#include "crossguard/pair_features.hpp"
#include "crossguard/predictions.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

/// Debounce for per-pair verdict streams: an alarm fires on the k-th
/// consecutive positive while armed, firing disarms the pair, and a run of
/// consecutive negatives re-arms it.
struct SporadicityConfig
{
  int k = 3;
  int rearm_after = 10;

  void validate() const
  {
    if (k < 1) {
      throw ConfigError("sporadicity k must be at least 1");
    }
    if (rearm_after < 1) {
      throw ConfigError("sporadicity rearm_after must be at least 1");
    }
  }
};

struct SporadicityState
{
  int consecutive_positives = 0;
  int consecutive_negatives = 0;
  bool armed = true;
};

/// Feeds one verdict through the debounce; true means an alarm fires now.
inline bool sporadicity_update(
  SporadicityState & st, bool verdict, const SporadicityConfig & cfg)
{
  if (verdict) {
    st.consecutive_negatives = 0;
    st.consecutive_positives += 1;
    if (st.armed && st.consecutive_positives >= cfg.k) {
      st.armed = false;
      return true;
    }
    return false;
  }
  st.consecutive_positives = 0;
  if (!st.armed) {
    st.consecutive_negatives += 1;
    if (st.consecutive_negatives >= cfg.rearm_after) {
      st.armed = true;
      st.consecutive_negatives = 0;
    }
  }
  return false;
}

/// One classified pair at one tick. Canonical order a < b.
struct DetectionRecord
{
  int tick = 0;
  VehicleId a = 0;
  VehicleId b = 0;
  bool verdict = false;
  double vote_fraction = 0.0;
  bool fired = false;
};

/// Tick-ordered log of every classified pair, alarms marked inline.
struct DetectionLog
{
  std::string method;
  double tick_s = 0.1;
  int horizon_len = 0;
  std::vector<DetectionRecord> records;

  std::vector<DetectionRecord> alarms() const
  {
    std::vector<DetectionRecord> out;
    for (const DetectionRecord & r : records) {
      if (r.fired) out.push_back(r);
    }
    return out;
  }

  /// One JSON object per line; keys are dumped in sorted order so the file
  /// is byte-stable across runs.
  void save_jsonl(const std::string & path) const
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw ConfigError("cannot open " + path + " for writing");
    }
    for (const DetectionRecord & r : records) {
      nlohmann::json j;
      j["tick"] = r.tick;
      j["pair"] = nlohmann::json::array({r.a, r.b});
      j["verdict"] = r.verdict;
      j["vote_fraction"] = r.vote_fraction;
      j["fired"] = r.fired;
      j["method"] = method;
      out << j.dump() << "\n";
    }
  }

  static DetectionLog load_jsonl(const std::string & path)
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw ConfigError("cannot open " + path);
    }
    DetectionLog log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      line_no += 1;
      if (line.empty()) continue;
      DetectionRecord r;
      std::string m;
      try {
        const nlohmann::json j = nlohmann::json::parse(line);
        check_keys(
          j, {"tick", "pair", "verdict", "vote_fraction", "fired", "method"},
          "detection log record");
        r.tick = j.at("tick").get<int>();
        const auto & pair = j.at("pair");
        if (!pair.is_array() || pair.size() != 2) {
          throw SchemaError("detection log pair must be a two-element array");
        }
        r.a = pair.at(0).get<VehicleId>();
        r.b = pair.at(1).get<VehicleId>();
        r.verdict = j.at("verdict").get<bool>();
        r.vote_fraction = j.at("vote_fraction").get<double>();
        r.fired = j.at("fired").get<bool>();
        m = j.at("method").get<std::string>();
      } catch (const nlohmann::json::exception & e) {
        throw SchemaError(
          "detection log line " + std::to_string(line_no) + ": " + e.what());
      }
      if (log.records.empty()) {
        log.method = m;
      } else if (m != log.method) {
        throw SchemaError("detection log mixes methods");
      }
      log.records.push_back(r);
    }
    return log;
  }
};

struct DetectionConfig
{
  SporadicityConfig sporadicity;
  double gating_m = 50.0;
};

/// Classifies every gated vehicle pair on every tick and debounces the
/// verdict stream per pair. Pairs without cached predictions (window warmup,
/// late spawns) are skipped; a pair that leaves the gate keeps its debounce
/// state until it returns.
inline DetectionLog run_detection(
  const Trace & trace, const PredictionSet & preds, const Forest & forest,
  const IntersectionLayout & layout, double k_scale,
  const DetectionConfig & cfg = DetectionConfig{})
{
  cfg.sporadicity.validate();
  if (forest.dim != pair_chi_dim(preds.horizon_len)) {
    throw ContractError(
      "forest feature dimension does not match the prediction horizon");
  }
  DetectionLog log;
  log.method = "random_forest";
  log.tick_s = trace.tick_s;
  log.horizon_len = preds.horizon_len;
  std::map<std::pair<VehicleId, VehicleId>, SporadicityState> states;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row = trace.ticks[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t k = i + 1; k < row.size(); ++k) {
        const VehicleState & sa = row[i];
        const VehicleState & sb = row[k];
        if ((sa.position - sb.position).norm() > cfg.gating_m) continue;
        const VehiclePrediction * pa = preds.find(sa.vehicle_id, t);
        const VehiclePrediction * pb = preds.find(sb.vehicle_id, t);
        if (pa == nullptr || pb == nullptr) continue;
        const Eigen::VectorXd chi = build_pair_chi(*pa, *pb, layout, k_scale);
        const Classification cls = forest.classify(chi);
        SporadicityState & st = states[{sa.vehicle_id, sb.vehicle_id}];
        const bool fired = sporadicity_update(st, cls.label != 0, cfg.sporadicity);
        log.records.push_back(
          DetectionRecord{
            t, sa.vehicle_id, sb.vehicle_id, cls.label != 0,
            cls.vote_fraction, fired});
      }
    }
  }
  return log;
}

/// Minimum oriented-rectangle distance between two vehicles over every tick
/// where both exist. Infinity when they never coexist.
inline double min_body_distance(const Trace & trace, VehicleId a, VehicleId b)
{
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trace.tick_count(); ++t) {
    const VehicleState * sa = trace.find(t, a);
    const VehicleState * sb = trace.find(t, b);
    if (sa == nullptr || sb == nullptr) continue;
    best = std::min(best, obb_distance(sa->body(), sb->body()));
  }
  return best;
}

/// Alarms on the same never-colliding pair separated by less than one second
/// of silence count as one false-alarm episode.
inline int episode_merge_gap_ticks(double tick_s)
{
  return static_cast<int>(std::lround(1.0 / tick_s));
}

struct DetectionMetrics
{
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  /// Seconds from the first pre-collision alarm to the collision, one entry
  /// per true positive, in canonical pair order.
  std::vector<double> reaction_times_s;
  /// Minimum body distance of the pair behind each false-alarm episode.
  std::vector<double> fp_min_body_m;
  /// Episode counts bucketed by that distance: [0,5) [5,10) [10,15) [15,inf).
  std::array<int, 4> fp_body_buckets{};

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["true_positives"] = true_positives;
    j["false_positives"] = false_positives;
    j["false_negatives"] = false_negatives;
    j["reaction_times_s"] = reaction_times_s;
    j["fp_min_body_m"] = fp_min_body_m;
    j["fp_body_buckets"] = fp_body_buckets;
    return j;
  }
};

inline int fp_bucket_index(double body_m)
{
  if (body_m < 5.0) return 0;
  if (body_m < 10.0) return 1;
  if (body_m < 15.0) return 2;
  return 3;
}

/// Pair-level episode scoring. A colliding pair with at least one alarm
/// strictly before its first collision is a hit; one with none is a miss.
/// Alarms on never-colliding pairs are false-alarm episodes after merging;
/// post-collision alarms on colliding pairs count as neither.
inline DetectionMetrics score_detection(
  const DetectionLog & log, const std::vector<CollisionEvent> & collisions,
  const Trace & trace)
{
  std::map<std::pair<VehicleId, VehicleId>, int> collision_tick;
  for (const CollisionEvent & ev : collisions) {
    const auto key = std::make_pair(ev.a, ev.b);
    const auto it = collision_tick.find(key);
    if (it == collision_tick.end() || ev.tick < it->second) {
      collision_tick[key] = ev.tick;
    }
  }
  std::map<std::pair<VehicleId, VehicleId>, std::vector<int>> alarm_ticks;
  for (const DetectionRecord & r : log.records) {
    if (r.fired) alarm_ticks[{r.a, r.b}].push_back(r.tick);
  }
  for (auto & [pair, ticks] : alarm_ticks) {
    std::sort(ticks.begin(), ticks.end());
  }

  DetectionMetrics m;
  for (const auto & [pair, t_col] : collision_tick) {
    int first_before = -1;
    const auto it = alarm_ticks.find(pair);
    if (it != alarm_ticks.end()) {
      for (int t : it->second) {
        if (t < t_col) {
          first_before = t;
          break;
        }
      }
    }
    if (first_before >= 0) {
      m.true_positives += 1;
      m.reaction_times_s.push_back((t_col - first_before) * trace.tick_s);
    } else {
      m.false_negatives += 1;
    }
  }

  const int gap = episode_merge_gap_ticks(trace.tick_s);
  for (const auto & [pair, ticks] : alarm_ticks) {
    if (collision_tick.count(pair) > 0) continue;
    int episodes = 0;
    int prev = std::numeric_limits<int>::min() / 2;
    for (int t : ticks) {
      if (t - prev > gap) episodes += 1;
      prev = t;
    }
    const double body = min_body_distance(trace, pair.first, pair.second);
    for (int e = 0; e < episodes; ++e) {
      m.false_positives += 1;
      m.fp_min_body_m.push_back(body);
      m.fp_body_buckets[fp_bucket_index(body)] += 1;
    }
  }
  return m;
}

}  // namespace crossguard

#endif  // CROSSGUARD__DETECTION_HPP_
