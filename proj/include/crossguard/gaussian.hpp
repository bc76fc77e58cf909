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

#ifndef CROSSGUARD__GAUSSIAN_HPP_
#define CROSSGUARD__GAUSSIAN_HPP_

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "crossguard/common.hpp"

namespace crossguard
{

/// Predicted location modeled as an independent diagonal 2D Gaussian.
struct GaussianLocation
{
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();  // (lat, lon) meters
  Eigen::Vector2d var = Eigen::Vector2d::Zero();   // per-axis variance, m^2
};

/// How the interval mass feeds the chi-squared scale: `kCoverage` treats the
/// band between the two quantile levels as the captured mass (u - l);
/// `kLiteral` uses the complement (1 - (u - l)).
enum class KEpsilonMode
{
  kCoverage,
  kLiteral,
};

inline std::string k_epsilon_mode_name(KEpsilonMode m)
{
  return m == KEpsilonMode::kCoverage ? "coverage" : "literal";
}

inline KEpsilonMode k_epsilon_mode_from_name(const std::string & s)
{
  if (s == "coverage") return KEpsilonMode::kCoverage;
  if (s == "literal") return KEpsilonMode::kLiteral;
  throw ConfigError("unknown k_epsilon_mode: " + s);
}

/// Chi-squared(2) inverse CDF at the mass implied by the quantile band
/// [l, u]. The two-degree case has the closed form -2 ln(1 - p).
inline double k_epsilon(double l, double u, KEpsilonMode mode = KEpsilonMode::kCoverage)
{
  if (!(l > 0.0 && l < u && u < 1.0)) {
    throw ContractError("k_epsilon requires 0 < l < u < 1");
  }
  const double band = u - l;
  const double p = mode == KEpsilonMode::kCoverage ? band : 1.0 - band;
  if (!(p > 0.0 && p < 1.0)) {
    throw ContractError("k_epsilon mass outside (0, 1)");
  }
  return -2.0 * std::log(1.0 - p);
}

/// Per-axis variance from full interval widths: sigma^2 = width^2 / K.
inline Eigen::Vector2d interval_to_covariance(const Eigen::Vector2d & widths, double k)
{
  if (!(k > 0.0)) {
    throw ContractError("interval_to_covariance requires K > 0");
  }
  if (widths(0) < 0.0 || widths(1) < 0.0) {
    throw ContractError("interval_to_covariance: negative interval width");
  }
  return (widths.array().square() / k).matrix();
}

inline double euclidean_distance(const Eigen::Vector2d & a, const Eigen::Vector2d & b)
{
  return (a - b).norm();
}

/// E[d^2] for two independent Gaussians: squared mean gap plus both traces.
inline double expected_squared_distance(
  const GaussianLocation & gi, const GaussianLocation & gk)
{
  // Grouped so the result is bitwise symmetric in the two arguments.
  return (gi.mean - gk.mean).squaredNorm() + (gi.var + gk.var).sum();
}

}  // namespace crossguard

#endif  // CROSSGUARD__GAUSSIAN_HPP_
