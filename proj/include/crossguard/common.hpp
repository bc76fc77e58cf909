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

#ifndef CROSSGUARD__COMMON_HPP_
#define CROSSGUARD__COMMON_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace crossguard
{

using Vec2 = Eigen::Vector2d;
using VehicleId = std::uint32_t;

/// Base class for all library errors.
class Error : public std::runtime_error
{
public:
  explicit Error(const std::string & msg) : std::runtime_error(msg) {}
};

/// Invalid user-supplied configuration (bad ratios, non-positive duration, ...).
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Malformed external input (CSV rows, checkpoint files); message names row and field.
class SchemaError : public Error
{
public:
  using Error::Error;
};

/// API misuse: shape or layout mismatch between caller and callee.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Optimization failure (divergence, degenerate dataset).
class TrainingError : public Error
{
public:
  using Error::Error;
};

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Normalize an angle in degrees to [0, 360).
inline double wrap_deg(double deg)
{
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w;
}

/// Absolute difference between two headings, folded to [0, 180] degrees.
inline double heading_gap_deg(double a, double b)
{
  double d = std::fabs(wrap_deg(a) - wrap_deg(b));
  return d > 180.0 ? 360.0 - d : d;
}

inline Vec2 heading_dir(double heading_deg)
{
  const double r = deg2rad(heading_deg);
  return {std::cos(r), std::sin(r)};
}

// Seeded sampling helpers. std::random distributions are implementation-defined,
// so every draw below is hand-rolled on top of the mt19937_64 stream to keep
// traces and experiments reproducible across standard libraries.
namespace rng
{

using Engine = std::mt19937_64;

/// Uniform double in [0, 1).
inline double uniform(Engine & g)
{
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine & g, double lo, double hi)
{
  return lo + (hi - lo) * uniform(g);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Engine & g, std::uint64_t n)
{
  if (n == 0) {
    throw ContractError("uniform_index: n must be positive");
  }
  // Rejection sampling over the smallest covering power of two.
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  std::uint64_t v;
  do {
    v = g() & mask;
  } while (v >= n);
  return v;
}

/// Standard normal via the polar method; the spare draw is discarded so each
/// call consumes a self-contained slice of the stream.
inline double normal(Engine & g)
{
  double u, v, s;
  do {
    u = 2.0 * uniform(g) - 1.0;
    v = 2.0 * uniform(g) - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

inline double normal(Engine & g, double mean, double stddev)
{
  return mean + stddev * normal(g);
}

/// Normal restricted to [mean + lo_z * stddev, mean + hi_z * stddev].
inline double truncated_normal(Engine & g, double mean, double stddev, double lo_z, double hi_z)
{
  if (!(lo_z < hi_z)) {
    throw ContractError("truncated_normal: lo_z must be below hi_z");
  }
  double z;
  do {
    z = normal(g);
  } while (z < lo_z || z > hi_z);
  return mean + stddev * z;
}

/// Marsaglia-Tsang gamma sampler, shape >= 1.
inline double gamma(Engine & g, double shape)
{
  if (shape < 1.0) {
    throw ContractError("gamma: shape must be >= 1");
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal(g);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform(g);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline double beta(Engine & g, double alpha, double beta_p)
{
  const double a = gamma(g, alpha);
  const double b = gamma(g, beta_p);
  return a / (a + b);
}

/// Derive an independent engine for a named sub-stream of a run seed.
inline Engine derive(std::uint64_t seed, std::uint64_t stream)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

}  // namespace rng

}  // namespace crossguard

#endif  // CROSSGUARD__COMMON_HPP_
