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

#ifndef CROSSGUARD__KALMAN_HPP_
#define CROSSGUARD__KALMAN_HPP_

#include <Eigen/Dense>

#include "crossguard/common.hpp"

namespace crossguard
{

/// Constant-velocity Kalman filter, one independent [position, velocity]
/// filter per axis. Position measurements only.
struct KalmanConfig
{
  double process_noise = 0.1;      // white-noise acceleration intensity q
  double measurement_noise = 0.1;  // position variance r
};

namespace detail
{

/// Filters one axis over the measurement sequence, returning the final state.
inline Eigen::Vector2d kf_axis_state(
  const Eigen::VectorXd & meas, double tick_s, const KalmanConfig & cfg)
{
  const double t = tick_s;
  Eigen::Matrix2d F;
  F << 1.0, t, 0.0, 1.0;
  // Discretized white-noise acceleration model.
  Eigen::Matrix2d Q;
  Q << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  Q *= cfg.process_noise;
  Eigen::Vector2d x(meas(0), 0.0);
  Eigen::Matrix2d P = Eigen::Matrix2d::Identity() * 100.0;
  for (Eigen::Index k = 1; k < meas.size(); ++k) {
    x = F * x;
    P = F * P * F.transpose() + Q;
    const double S = P(0, 0) + cfg.measurement_noise;
    if (S > 1e-12) {
      const Eigen::Vector2d K = P.col(0) / S;
      const double innov = meas(k) - x(0);
      x += K * innov;
      P -= K * P.row(0);
    }
  }
  return x;
}

}  // namespace detail

/// Runs the filter over a window of observed positions (rows, columns
/// (lat, lon)), then extrapolates the converged state open loop for
/// horizon_len steps. Returns L x 2 positions in meters.
inline Eigen::MatrixXd kf_predict(
  const Eigen::MatrixXd & positions, double tick_s, int horizon_len,
  const KalmanConfig & cfg = KalmanConfig{})
{
  if (positions.rows() < 2 || positions.cols() != 2) {
    throw ContractError("kf_predict needs at least two (lat, lon) samples");
  }
  Eigen::MatrixXd out(horizon_len, 2);
  for (int axis = 0; axis < 2; ++axis) {
    const Eigen::Vector2d state = detail::kf_axis_state(positions.col(axis), tick_s, cfg);
    for (int j = 0; j < horizon_len; ++j) {
      out(j, axis) = state(0) + state(1) * tick_s * static_cast<double>(j + 1);
    }
  }
  return out;
}

}  // namespace crossguard

#endif  // CROSSGUARD__KALMAN_HPP_
