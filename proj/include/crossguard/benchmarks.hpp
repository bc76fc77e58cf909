// Copyright 2026 The Crossguard Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CROSSGUARD__BENCHMARKS_HPP_
#define CROSSGUARD__BENCHMARKS_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "crossguard/common.hpp"
#include "crossguard/detection.hpp"
#include "crossguard/predictions.hpp"
#include "crossguard/trace.hpp"

namespace crossguard
{

/// Alarm rule: positive whenever any step of the predicted separation
/// undercuts the distance threshold. No debounce; every positive tick fires.
inline DetectionLog relative_distance_detect(
  const Trace & trace, const PredictionSet & preds, double d_c,
  double gating_m = 50.0)
{
  if (d_c <= 0.0) {
    throw ConfigError("relative distance threshold must be positive");
  }
  DetectionLog log;
  log.method = "relative_distance";
  log.tick_s = trace.tick_s;
  log.horizon_len = preds.horizon_len;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row = trace.ticks[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t k = i + 1; k < row.size(); ++k) {
        const VehicleState & sa = row[i];
        const VehicleState & sb = row[k];
        if ((sa.position - sb.position).norm() > gating_m) continue;
        const VehiclePrediction * pa = preds.find(sa.vehicle_id, t);
        const VehiclePrediction * pb = preds.find(sb.vehicle_id, t);
        if (pa == nullptr || pb == nullptr) continue;
        double dmin = std::numeric_limits<double>::infinity();
        for (int j = 0; j < preds.horizon_len; ++j) {
          dmin = std::min(dmin, (pa->point.row(j) - pb->point.row(j)).norm());
        }
        const bool verdict = dmin < d_c;
        log.records.push_back(
          DetectionRecord{
            t, sa.vehicle_id, sb.vehicle_id, verdict, verdict ? 1.0 : 0.0,
            verdict});
      }
    }
  }
  return log;
}

/// Real roots of sum_i coeffs[i] t^i. Eigenvalues of the companion matrix of
/// the monic normalization, Newton-polished against the original polynomial;
/// candidates whose residual stays above `residual_tol` are dropped.
inline std::vector<double> polynomial_real_roots(
  const std::vector<double> & coeffs, double residual_tol = 1e-6)
{
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  int degree = static_cast<int>(coeffs.size()) - 1;
  while (degree > 0 && std::abs(coeffs[static_cast<std::size_t>(degree)]) <= 1e-12 * scale) {
    degree -= 1;
  }
  if (degree <= 0) return {};

  const auto eval = [&coeffs, degree](double t, double & f, double & df) {
    f = 0.0;
    df = 0.0;
    for (int i = degree; i >= 0; --i) {
      df = df * t + f;
      f = f * t + coeffs[static_cast<std::size_t>(i)];
    }
  };

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  const double lead = coeffs[static_cast<std::size_t>(degree)];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) {
    companion(i, degree - 1) = -coeffs[static_cast<std::size_t>(i)] / lead;
  }
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);

  std::vector<double> roots;
  for (int i = 0; i < degree; ++i) {
    const std::complex<double> ev = solver.eigenvalues()(i);
    if (std::abs(ev.imag()) > 1e-8 * (1.0 + std::abs(ev.real()))) continue;
    double t = ev.real();
    for (int it = 0; it < 30; ++it) {
      double f = 0.0;
      double df = 0.0;
      eval(t, f, df);
      if (std::abs(f) <= 0.1 * residual_tol || df == 0.0) break;
      const double step = f / df;
      if (!std::isfinite(step)) break;
      t -= step;
    }
    double f = 0.0;
    double df = 0.0;
    eval(t, f, df);
    if (std::abs(f) >= residual_tol) continue;
    const bool duplicate = std::any_of(
      roots.begin(), roots.end(),
      [t](double r) { return std::abs(r - t) <= 1e-9 * (1.0 + std::abs(t)); });
    if (!duplicate) roots.push_back(t);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Coefficients of |dp + dv t + da t^2 / 2|^2 - radius^2 by powers of t.
inline std::vector<double> entry_polynomial(
  const Vec2 & dp, const Vec2 & dv, const Vec2 & da, double radius)
{
  return {
    dp.squaredNorm() - radius * radius,
    2.0 * dp.dot(dv),
    dv.squaredNorm() + dp.dot(da),
    dv.dot(da),
    0.25 * da.squaredNorm()};
}

/// First time within (0, horizon] at which the constant-acceleration
/// relative motion enters the warning radius. Zero when already inside;
/// empty when the separation stays beyond the radius.
inline std::optional<double> first_entry_time(
  const Vec2 & dp, const Vec2 & dv, const Vec2 & da, double radius,
  double horizon_s)
{
  if (radius <= 0.0 || horizon_s <= 0.0) {
    throw ConfigError("warning radius and horizon must be positive");
  }
  if (dp.squaredNorm() <= radius * radius) return 0.0;
  const std::vector<double> roots =
    polynomial_real_roots(entry_polynomial(dp, dv, da, radius));
  for (double t : roots) {
    if (t > 0.0 && t <= horizon_s) return t;
  }
  return std::nullopt;
}

struct CiCwsConfig
{
  double radius_m = 4.0;
  double horizon_s = 3.0;
  double gating_m = 50.0;
};

/// Closed-form warning benchmark: each pair's current positions, headings,
/// speeds, and accelerations are extrapolated under constant acceleration;
/// an alarm fires on every tick whose extrapolation enters the radius within
/// the horizon. No predictions and no debounce are involved.
inline DetectionLog ci_cws_detect(
  const Trace & trace, const CiCwsConfig & cfg = CiCwsConfig{})
{
  DetectionLog log;
  log.method = "ci_cws";
  log.tick_s = trace.tick_s;
  log.horizon_len = 0;
  for (int t = 0; t < trace.tick_count(); ++t) {
    const auto & row = trace.ticks[t];
    for (std::size_t i = 0; i < row.size(); ++i) {
      for (std::size_t k = i + 1; k < row.size(); ++k) {
        const VehicleState & sa = row[i];
        const VehicleState & sb = row[k];
        if ((sa.position - sb.position).norm() > cfg.gating_m) continue;
        const Vec2 dir_a = heading_dir(sa.heading_deg);
        const Vec2 dir_b = heading_dir(sb.heading_deg);
        const Vec2 dp = sb.position - sa.position;
        const Vec2 dv = sb.speed * dir_b - sa.speed * dir_a;
        const Vec2 da = sb.accel * dir_b - sa.accel * dir_a;
        const bool verdict =
          first_entry_time(dp, dv, da, cfg.radius_m, cfg.horizon_s)
            .has_value();
        log.records.push_back(
          DetectionRecord{
            t, sa.vehicle_id, sb.vehicle_id, verdict, verdict ? 1.0 : 0.0,
            verdict});
      }
    }
  }
  return log;
}

}  // namespace crossguard

#endif  // CROSSGUARD__BENCHMARKS_HPP_
