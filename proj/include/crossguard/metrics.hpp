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

#ifndef CROSSGUARD__METRICS_HPP_
#define CROSSGUARD__METRICS_HPP_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossguard/common.hpp"
#include "crossguard/quantile_model.hpp"

namespace crossguard
{

/// One evaluated prediction: L x 2 matrices of predicted and true positions
/// plus whether the vehicle's route turns.
struct EvaluatedPrediction
{
  Eigen::MatrixXd predicted;  // L x 2 (lat, lon) meters
  Eigen::MatrixXd truth;      // L x 2
  bool turning = false;
};

enum class Segment
{
  kAll = 0,
  kTurning = 1,
  kNonTurning = 2,
};

inline const char * segment_name(Segment s)
{
  switch (s) {
    case Segment::kAll: return "all";
    case Segment::kTurning: return "turning";
    default: return "non_turning";
  }
}

/// Mean Euclidean displacement error per horizon second and segment, with
/// the raw per-sample errors retained for distribution plots.
struct ErrorReport
{
  int steps_per_second = 10;
  int horizon_seconds = 3;
  // Indexed [segment][second-1]; second s means decoder step s*steps_per_second.
  std::array<std::vector<double>, 3> mean_ed;
  std::array<std::vector<std::vector<double>>, 3> errors;
  std::array<std::size_t, 3> count = {0, 0, 0};
};

inline ErrorReport evaluate_ed(
  const std::vector<EvaluatedPrediction> & samples, int steps_per_second = 10)
{
  ErrorReport rep;
  rep.steps_per_second = steps_per_second;
  if (samples.empty()) throw ContractError("no samples to evaluate");
  const auto L = samples.front().predicted.rows();
  rep.horizon_seconds = static_cast<int>(L) / steps_per_second;
  for (int seg = 0; seg < 3; ++seg) {
    rep.mean_ed[seg].assign(static_cast<std::size_t>(rep.horizon_seconds), 0.0);
    rep.errors[seg].assign(static_cast<std::size_t>(rep.horizon_seconds), {});
  }
  for (const auto & s : samples) {
    if (s.predicted.rows() != L || s.truth.rows() != L) {
      throw ContractError("prediction/truth length mismatch");
    }
    for (int sec = 1; sec <= rep.horizon_seconds; ++sec) {
      const Eigen::Index row = static_cast<Eigen::Index>(sec * steps_per_second - 1);
      const double ed = (s.predicted.row(row) - s.truth.row(row)).norm();
      rep.errors[0][static_cast<std::size_t>(sec - 1)].push_back(ed);
      const int seg = s.turning ? 1 : 2;
      rep.errors[seg][static_cast<std::size_t>(sec - 1)].push_back(ed);
    }
    ++rep.count[0];
    ++rep.count[s.turning ? 1 : 2];
  }
  for (int seg = 0; seg < 3; ++seg) {
    for (int sec = 0; sec < rep.horizon_seconds; ++sec) {
      const auto & e = rep.errors[seg][static_cast<std::size_t>(sec)];
      if (e.empty()) continue;
      double acc = 0.0;
      for (const double v : e) acc += v;
      rep.mean_ed[seg][static_cast<std::size_t>(sec)] = acc / static_cast<double>(e.size());
    }
  }
  return rep;
}

/// One coverage sample: interval trajectory plus the true future positions.
struct CoverageSample
{
  IntervalTrajectory interval;
  Eigen::MatrixXd truth;  // L x 2
};

/// Fractions of truths below the upper bound, below the lower bound, and
/// strictly between (closed at the upper bound), per horizon second and axis.
struct CoverageReport
{
  int horizon_seconds = 3;
  // Indexed [axis][second-1], axis 0 = lat, 1 = lon.
  std::array<std::vector<double>, 2> below_upper;
  std::array<std::vector<double>, 2> below_lower;
  std::array<std::vector<double>, 2> in_between;
};

inline CoverageReport evaluate_coverage(
  const std::vector<CoverageSample> & samples, int steps_per_second = 10)
{
  if (samples.empty()) throw ContractError("no coverage samples");
  const auto L = samples.front().interval.lower.rows();
  CoverageReport rep;
  rep.horizon_seconds = static_cast<int>(L) / steps_per_second;
  for (int axis = 0; axis < 2; ++axis) {
    rep.below_upper[axis].assign(static_cast<std::size_t>(rep.horizon_seconds), 0.0);
    rep.below_lower[axis].assign(static_cast<std::size_t>(rep.horizon_seconds), 0.0);
    rep.in_between[axis].assign(static_cast<std::size_t>(rep.horizon_seconds), 0.0);
  }
  for (int sec = 1; sec <= rep.horizon_seconds; ++sec) {
    const Eigen::Index row = static_cast<Eigen::Index>(sec * steps_per_second - 1);
    for (int axis = 0; axis < 2; ++axis) {
      std::size_t bu = 0, bl = 0;
      for (const auto & s : samples) {
        const double y = s.truth(row, axis);
        if (y <= s.interval.upper(row, axis)) ++bu;
        if (y <= s.interval.lower(row, axis)) ++bl;
      }
      const double n = static_cast<double>(samples.size());
      rep.below_upper[axis][static_cast<std::size_t>(sec - 1)] = static_cast<double>(bu) / n;
      rep.below_lower[axis][static_cast<std::size_t>(sec - 1)] = static_cast<double>(bl) / n;
      rep.in_between[axis][static_cast<std::size_t>(sec - 1)] =
        (static_cast<double>(bu) - static_cast<double>(bl)) / n;
    }
  }
  return rep;
}

}  // namespace crossguard

#endif  // CROSSGUARD__METRICS_HPP_
