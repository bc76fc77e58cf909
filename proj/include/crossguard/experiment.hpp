// Copyright 2026 The Crossguard Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef CROSSGUARD__EXPERIMENT_HPP_
#define CROSSGUARD__EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/avoidance.hpp"
#include "crossguard/benchmarks.hpp"
#include "crossguard/dataset.hpp"
#include "crossguard/detection.hpp"
#include "crossguard/forest.hpp"
#include "crossguard/gaussian.hpp"
#include "crossguard/kalman.hpp"
#include "crossguard/metrics.hpp"
#include "crossguard/pair_features.hpp"
#include "crossguard/point_model.hpp"
#include "crossguard/predictions.hpp"
#include "crossguard/quantile_model.hpp"
#include "crossguard/scenario.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

/// Knobs shared by every stage downstream of scenario generation.
struct PipelineConfig
{
  int input_len = 30;
  int horizon_len = 30;
  std::uint64_t split_seed = 1;
  KEpsilonMode k_epsilon_mode = KEpsilonMode::kCoverage;
  int sporadicity_k = 3;
  int rearm_after = 10;
  double gating_m = 50.0;
  double threshold_quantile = 0.9;
  double ci_cws_radius_m = 4.0;
  double ci_cws_horizon_s = 3.0;
  /// Window stride when scoring trajectory error and coverage.
  int eval_stride = 1;

  void validate() const
  {
    if (input_len < 2 || horizon_len < 1) {
      throw ConfigError("window lengths out of range");
    }
    if (sporadicity_k < 1 || rearm_after < 1) {
      throw ConfigError("debounce parameters must be positive");
    }
    if (gating_m <= 0.0) throw ConfigError("gating distance must be positive");
    if (threshold_quantile <= 0.0 || threshold_quantile > 1.0) {
      throw ConfigError("threshold quantile must sit in (0, 1]");
    }
    if (ci_cws_radius_m <= 0.0 || ci_cws_horizon_s <= 0.0) {
      throw ConfigError("warning radius and horizon must be positive");
    }
    if (eval_stride < 1) throw ConfigError("eval stride must be positive");
  }
};

inline PipelineConfig pipeline_config_from_json(const nlohmann::json & j)
{
  check_keys(
    j,
    {"input_len", "horizon_len", "split_seed", "k_epsilon_mode",
     "sporadicity_k", "rearm_after", "gating_m", "threshold_quantile",
     "ci_cws_radius_m", "ci_cws_horizon_s", "eval_stride"},
    "pipeline config");
  PipelineConfig c;
  if (j.contains("input_len")) c.input_len = j.at("input_len").get<int>();
  if (j.contains("horizon_len")) c.horizon_len = j.at("horizon_len").get<int>();
  if (j.contains("split_seed")) c.split_seed = j.at("split_seed").get<std::uint64_t>();
  if (j.contains("k_epsilon_mode")) {
    c.k_epsilon_mode = k_epsilon_mode_from_name(j.at("k_epsilon_mode").get<std::string>());
  }
  if (j.contains("sporadicity_k")) c.sporadicity_k = j.at("sporadicity_k").get<int>();
  if (j.contains("rearm_after")) c.rearm_after = j.at("rearm_after").get<int>();
  if (j.contains("gating_m")) c.gating_m = j.at("gating_m").get<double>();
  if (j.contains("threshold_quantile")) {
    c.threshold_quantile = j.at("threshold_quantile").get<double>();
  }
  if (j.contains("ci_cws_radius_m")) c.ci_cws_radius_m = j.at("ci_cws_radius_m").get<double>();
  if (j.contains("ci_cws_horizon_s")) c.ci_cws_horizon_s = j.at("ci_cws_horizon_s").get<double>();
  if (j.contains("eval_stride")) c.eval_stride = j.at("eval_stride").get<int>();
  return c;
}

inline nlohmann::json pipeline_config_to_json(const PipelineConfig & c)
{
  nlohmann::json j;
  j["input_len"] = c.input_len;
  j["horizon_len"] = c.horizon_len;
  j["split_seed"] = c.split_seed;
  j["k_epsilon_mode"] = k_epsilon_mode_name(c.k_epsilon_mode);
  j["sporadicity_k"] = c.sporadicity_k;
  j["rearm_after"] = c.rearm_after;
  j["gating_m"] = c.gating_m;
  j["threshold_quantile"] = c.threshold_quantile;
  j["ci_cws_radius_m"] = c.ci_cws_radius_m;
  j["ci_cws_horizon_s"] = c.ci_cws_horizon_s;
  j["eval_stride"] = c.eval_stride;
  return j;
}

struct AvoidanceConfig
{
  std::vector<double> decels = {4.5, 9.0};
  std::vector<DriverType> drivers = {DriverType::kHuman, DriverType::kAutomated};
  int trials = 20;
  LatencyConfig latency;

  void validate() const
  {
    if (decels.empty() || drivers.empty()) {
      throw ConfigError("avoidance needs at least one deceleration and driver");
    }
    for (double d : decels) {
      if (d <= 0.0) throw ConfigError("deceleration must be positive");
    }
    if (trials < 1) throw ConfigError("avoidance needs at least one trial");
    latency.validate();
  }
};

inline AvoidanceConfig avoidance_config_from_json(const nlohmann::json & j)
{
  check_keys(j, {"decels", "drivers", "trials"}, "avoidance config");
  AvoidanceConfig c;
  if (j.contains("decels")) c.decels = j.at("decels").get<std::vector<double>>();
  if (j.contains("drivers")) {
    c.drivers.clear();
    for (const auto & d : j.at("drivers")) {
      c.drivers.push_back(driver_type_from_name(d.get<std::string>()));
    }
  }
  if (j.contains("trials")) c.trials = j.at("trials").get<int>();
  return c;
}

inline nlohmann::json avoidance_config_to_json(const AvoidanceConfig & c)
{
  nlohmann::json j;
  j["decels"] = c.decels;
  nlohmann::json drivers = nlohmann::json::array();
  for (DriverType d : c.drivers) drivers.push_back(driver_type_name(d));
  j["drivers"] = drivers;
  j["trials"] = c.trials;
  return j;
}

/// Everything one end-to-end run needs: traffic for training and for
/// evaluation, model sizes, and detector knobs.
struct ExperimentConfig
{
  std::uint64_t seed = 1;
  ScenarioConfig scenario;
  std::optional<ScenarioConfig> eval_scenario;
  PipelineConfig pipeline;
  PointModelConfig point;
  QuantileModelConfig quantile;
  RfcConfig rfc;
  AvoidanceConfig avoidance;

  /// The evaluation scenario defaults to the training one reseeded.
  ScenarioConfig resolved_eval() const
  {
    if (eval_scenario) return *eval_scenario;
    ScenarioConfig ev = scenario;
    ev.seed = scenario.seed + 1;
    return ev;
  }

  void validate() const
  {
    scenario.validate();
    resolved_eval().validate();
    pipeline.validate();
    point.validate();
    quantile.validate();
    rfc.validate();
    avoidance.validate();
  }

  static ExperimentConfig from_json(const nlohmann::json & j)
  {
    check_keys(
      j,
      {"seed", "scenario", "eval_scenario", "pipeline", "models", "avoidance"},
      "experiment config");
    ExperimentConfig c;
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("scenario")) {
      c.scenario = scenario_config_from_json(j.at("scenario"));
    }
    if (j.contains("eval_scenario")) {
      c.eval_scenario = scenario_config_from_json(j.at("eval_scenario"));
    }
    if (j.contains("pipeline")) {
      c.pipeline = pipeline_config_from_json(j.at("pipeline"));
    }
    if (j.contains("models")) {
      const auto & m = j.at("models");
      check_keys(m, {"point", "quantile", "rfc"}, "models config");
      if (m.contains("point")) c.point = point_config_from_json(m.at("point"));
      if (m.contains("quantile")) {
        c.quantile = quantile_config_from_json(m.at("quantile"));
      }
      if (m.contains("rfc")) c.rfc = rfc_config_from_json(m.at("rfc"));
    }
    if (j.contains("avoidance")) {
      c.avoidance = avoidance_config_from_json(j.at("avoidance"));
    }
    return c;
  }

  nlohmann::json to_json() const
  {
    nlohmann::json j;
    j["seed"] = seed;
    j["scenario"] = scenario_config_to_json(scenario);
    j["eval_scenario"] = scenario_config_to_json(resolved_eval());
    j["pipeline"] = pipeline_config_to_json(pipeline);
    j["models"]["point"] = point_config_to_json(point);
    j["models"]["quantile"] = quantile_config_to_json(quantile);
    j["models"]["rfc"] = rfc_config_to_json(rfc);
    j["avoidance"] = avoidance_config_to_json(avoidance);
    return j;
  }
};

inline ExperimentConfig load_experiment_config(const std::string & path)
{
  return ExperimentConfig::from_json(read_json_file(path));
}

namespace detail
{

inline std::uint64_t fnv1a_string(const std::string & s)
{
  std::uint64_t h = 1469598103934665603ULL;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename Fn>
auto run_stage(const std::string & name, Fn && fn) -> decltype(fn())
{
  try {
    return fn();
  } catch (const Error & e) {
    throw Error(name + ": " + e.what());
  }
}

}  // namespace detail

/// Nearest-rank deciles (10th through 90th) of a sample.
inline std::vector<double> decile_values(std::vector<double> xs)
{
  std::vector<double> out;
  if (xs.empty()) return out;
  std::sort(xs.begin(), xs.end());
  for (std::size_t d = 1; d <= 9; ++d) {
    const std::size_t rank = (d * xs.size() + 9) / 10;
    out.push_back(xs[std::max<std::size_t>(rank, 1) - 1]);
  }
  return out;
}

inline nlohmann::json error_report_to_json(const ErrorReport & r)
{
  nlohmann::json j;
  j["horizon_seconds"] = r.horizon_seconds;
  for (int seg = 0; seg < 3; ++seg) {
    const char * name = segment_name(static_cast<Segment>(seg));
    j[name]["mean_ed"] = r.mean_ed[static_cast<std::size_t>(seg)];
    j[name]["count"] = r.count[static_cast<std::size_t>(seg)];
    nlohmann::json dec = nlohmann::json::array();
    for (const auto & errs : r.errors[static_cast<std::size_t>(seg)]) {
      dec.push_back(decile_values(errs));
    }
    j[name]["deciles"] = dec;
  }
  return j;
}

inline nlohmann::json coverage_report_to_json(const CoverageReport & r)
{
  nlohmann::json j;
  j["horizon_seconds"] = r.horizon_seconds;
  const char * axes[2] = {"lat", "lon"};
  for (int axis = 0; axis < 2; ++axis) {
    j[axes[axis]]["below_upper"] = r.below_upper[static_cast<std::size_t>(axis)];
    j[axes[axis]]["below_lower"] = r.below_lower[static_cast<std::size_t>(axis)];
    j[axes[axis]]["in_between"] = r.in_between[static_cast<std::size_t>(axis)];
  }
  return j;
}

inline nlohmann::json history_to_json(const nn::TrainHistory & h)
{
  nlohmann::json j;
  j["epochs"] = h.epochs;
  j["stop_reason"] = h.stop_reason;
  j["train_loss"] = h.train_loss;
  j["val_loss"] = h.val_loss;
  return j;
}

/// Forest importances folded over the horizon: one mass per per-step
/// feature kind.
inline nlohmann::json importance_by_kind(const Forest & forest)
{
  const auto names = pair_feature_kind_names();
  std::vector<double> mass(names.size(), 0.0);
  for (int i = 0; i < forest.importance.size(); ++i) {
    mass[static_cast<std::size_t>(i) % names.size()] += forest.importance(i);
  }
  nlohmann::json j;
  for (std::size_t k = 0; k < names.size(); ++k) j[names[k]] = mass[k];
  return j;
}

struct TrajectoryEval
{
  ErrorReport model;
  ErrorReport kalman;
  CoverageReport coverage;
  int samples = 0;
  int turning_samples = 0;
};

/// Scores the sequence models against the constant-velocity filter on the
/// held-out vehicles of the training trace.
inline TrajectoryEval evaluate_trajectories(
  const PreparedDataset & ds, const PredictionSet & preds, const Trace & trace,
  int stride)
{
  const int T = ds.input_len;
  const int L = ds.horizon_len;
  const auto flags = turning_flags(trace);
  std::vector<EvaluatedPrediction> model_samples;
  std::vector<EvaluatedPrediction> kf_samples;
  std::vector<CoverageSample> cov_samples;
  TrajectoryEval ev;
  for (const std::size_t idx : ds.test_tracks()) {
    const FeatureTrack & trk = ds.tracks[idx];
    const int n = static_cast<int>(trk.pos.rows());
    const bool turning = flags.count(trk.id) > 0 && flags.at(trk.id);
    for (int b = 0; b + T + L <= n; b += stride) {
      const VehiclePrediction * vp = preds.find(trk.id, trk.first_tick + T - 1 + b);
      if (vp == nullptr) {
        throw ContractError("prediction cache is missing a test window");
      }
      const Eigen::MatrixXd truth = trk.pos.middleRows(b + T, L);
      model_samples.push_back(EvaluatedPrediction{vp->point, truth, turning});
      kf_samples.push_back(
        EvaluatedPrediction{
          kf_predict(trk.pos.middleRows(b, T), ds.tick_s, L), truth, turning});
      cov_samples.push_back(
        CoverageSample{IntervalTrajectory{vp->lower, vp->upper}, truth});
      ev.samples += 1;
      if (turning) ev.turning_samples += 1;
    }
  }
  const int steps_per_second = static_cast<int>(std::lround(1.0 / ds.tick_s));
  ev.model = evaluate_ed(model_samples, steps_per_second);
  ev.kalman = evaluate_ed(kf_samples, steps_per_second);
  ev.coverage = evaluate_coverage(cov_samples, steps_per_second);
  return ev;
}

struct ExperimentArtifacts
{
  IntersectionLayout layout;
  Trace train_trace;
  Trace eval_trace;
  std::vector<CollisionEvent> train_collisions;
  std::vector<CollisionEvent> eval_collisions;
  PreparedDataset dataset;
  PointModel point;
  QuantileModel quantile_lat;
  QuantileModel quantile_lon;
  DistanceThresholds thresholds;
  Forest forest;
  PredictionSet eval_preds;
  DetectionLog log_rfc;
  DetectionLog log_rd;
  DetectionLog log_ci;
  DetectionMetrics met_rfc;
  DetectionMetrics met_rd;
  DetectionMetrics met_ci;
  AvoidanceReport avoidance;
  TrajectoryEval trajectories;
  nlohmann::json metrics;
};

inline nlohmann::json trace_summary_json(
  const Trace & trace, const std::vector<CollisionEvent> & collisions,
  std::size_t vehicles)
{
  nlohmann::json j;
  j["ticks"] = trace.tick_count();
  j["vehicles"] = vehicles;
  j["collisions"] = collisions.size();
  return j;
}

/// Runs the full pipeline: traffic generation, dataset preparation, model
/// training, threshold calibration, classifier training, detection with all
/// three detectors on the evaluation trace, scoring, and braking replays.
/// Every artifact lands under `out_dir`; the metrics bundle is also
/// returned. Reruns with an identical config produce byte-identical
/// metrics.
inline ExperimentArtifacts run_experiment(
  const ExperimentConfig & cfg, const std::filesystem::path & out_dir)
{
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "train");
  fs::create_directories(out_dir / "eval");
  fs::create_directories(out_dir / "models");
  fs::create_directories(out_dir / "logs");

  const nlohmann::json config_json = cfg.to_json();
  write_json_file(config_json, (out_dir / "config.json").string());

  ExperimentArtifacts art;

  detail::run_stage("generate", [&] {
    ScenarioOutput train = generate_scenario(cfg.scenario);
    art.layout = train.layout;
    art.train_trace = std::move(train.trace);
    art.train_collisions = detect_ground_truth_collisions(art.train_trace);
    emit_trace_csv(art.train_trace, (out_dir / "train" / "trace.csv").string());

    ScenarioOutput eval = generate_scenario(cfg.resolved_eval());
    art.eval_trace = std::move(eval.trace);
    art.eval_collisions = detect_ground_truth_collisions(art.eval_trace);
    emit_trace_csv(art.eval_trace, (out_dir / "eval" / "trace.csv").string());
    return 0;
  });

  FeatureLayoutInfo info;
  info.lane_card = cfg.scenario.lanes_per_approach;
  info.edge_card = art.layout.edge_count();

  detail::run_stage("prepare", [&] {
    art.dataset = prepare_dataset(
      art.train_trace, art.train_collisions, info, cfg.pipeline.input_len,
      cfg.pipeline.horizon_len, cfg.pipeline.split_seed);
    art.dataset.save(out_dir / "dataset");
    return 0;
  });

  const auto train_windows = enumerate_windows(
    art.dataset.tracks, art.dataset.train_tracks(), cfg.pipeline.input_len,
    cfg.pipeline.horizon_len);
  const auto val_windows = enumerate_windows(
    art.dataset.tracks, art.dataset.val_tracks(), cfg.pipeline.input_len,
    cfg.pipeline.horizon_len);

  detail::run_stage("train-point", [&] {
    art.point = train_point_model(
      art.dataset.tracks, art.dataset.scaler, train_windows, val_windows,
      cfg.pipeline.input_len, cfg.pipeline.horizon_len, cfg.point, cfg.seed);
    art.point.save(out_dir / "models" / "point");
    return 0;
  });
  detail::run_stage("train-quantile-lat", [&] {
    art.quantile_lat = train_quantile_model(
      art.dataset.tracks, art.dataset.scaler, train_windows, val_windows,
      cfg.pipeline.input_len, cfg.pipeline.horizon_len, Axis::kLat,
      cfg.quantile, cfg.seed + 1);
    art.quantile_lat.save(out_dir / "models" / "quantile_lat");
    return 0;
  });
  detail::run_stage("train-quantile-lon", [&] {
    art.quantile_lon = train_quantile_model(
      art.dataset.tracks, art.dataset.scaler, train_windows, val_windows,
      cfg.pipeline.input_len, cfg.pipeline.horizon_len, Axis::kLon,
      cfg.quantile, cfg.seed + 2);
    art.quantile_lon.save(out_dir / "models" / "quantile_lon");
    return 0;
  });

  const PredictionSet train_preds = detail::run_stage("predict-train", [&] {
    return predict_all(
      art.dataset.tracks, art.dataset.scaler, art.point, art.quantile_lat,
      art.quantile_lon);
  });

  detail::run_stage("evaluate-trajectories", [&] {
    art.trajectories = evaluate_trajectories(
      art.dataset, train_preds, art.train_trace, cfg.pipeline.eval_stride);
    return 0;
  });

  const double k_scale = k_epsilon(
    cfg.quantile.lower_q, cfg.quantile.upper_q, cfg.pipeline.k_epsilon_mode);

  detail::run_stage("thresholds", [&] {
    std::vector<std::pair<VehicleId, VehicleId>> pairs;
    for (const CollisionEvent & ev : art.train_collisions) {
      pairs.emplace_back(ev.a, ev.b);
    }
    art.thresholds = compute_distance_thresholds(
      art.train_trace, pairs, cfg.pipeline.threshold_quantile);
    return 0;
  });

  const PairDataset pair_data = detail::run_stage("pairs", [&] {
    PairDataset pd = build_pair_dataset(
      art.train_trace, art.train_collisions, train_preds, art.layout,
      art.thresholds, k_scale, cfg.pipeline.gating_m);
    pd.save(out_dir / "pairs");
    return pd;
  });

  detail::run_stage("train-rfc", [&] {
    RfcConfig rfc = cfg.rfc;
    if (rfc.seed == 0) rfc.seed = cfg.seed;
    art.forest = train_rfc(pair_data.feature_matrix(), pair_data.labels(), rfc);
    nlohmann::json extra;
    extra["d_c"] = art.thresholds.d_c;
    extra["d2_c"] = art.thresholds.d2_c;
    extra["threshold_quantile"] = art.thresholds.quantile;
    extra["k_scale"] = k_scale;
    extra["gating_m"] = cfg.pipeline.gating_m;
    extra["input_len"] = cfg.pipeline.input_len;
    extra["horizon_len"] = cfg.pipeline.horizon_len;
    art.forest.save(out_dir / "models" / "forest", extra);
    return 0;
  });

  const std::vector<FeatureTrack> eval_tracks =
    detail::run_stage("eval-features", [&] {
      return build_feature_tracks(art.eval_trace, info);
    });
  detail::run_stage("predict-eval", [&] {
    art.eval_preds = predict_all(
      eval_tracks, art.dataset.scaler, art.point, art.quantile_lat,
      art.quantile_lon);
    return 0;
  });

  detail::run_stage("detect", [&] {
    DetectionConfig det;
    det.sporadicity.k = cfg.pipeline.sporadicity_k;
    det.sporadicity.rearm_after = cfg.pipeline.rearm_after;
    det.gating_m = cfg.pipeline.gating_m;
    art.log_rfc = run_detection(
      art.eval_trace, art.eval_preds, art.forest, art.layout, k_scale, det);
    art.log_rd = relative_distance_detect(
      art.eval_trace, art.eval_preds, art.thresholds.d_c, cfg.pipeline.gating_m);
    CiCwsConfig ci;
    ci.radius_m = cfg.pipeline.ci_cws_radius_m;
    ci.horizon_s = cfg.pipeline.ci_cws_horizon_s;
    ci.gating_m = cfg.pipeline.gating_m;
    art.log_ci = ci_cws_detect(art.eval_trace, ci);
    art.log_rfc.save_jsonl((out_dir / "logs" / "detect_random_forest.jsonl").string());
    art.log_rd.save_jsonl((out_dir / "logs" / "detect_relative_distance.jsonl").string());
    art.log_ci.save_jsonl((out_dir / "logs" / "detect_ci_cws.jsonl").string());
    return 0;
  });

  detail::run_stage("score", [&] {
    art.met_rfc = score_detection(art.log_rfc, art.eval_collisions, art.eval_trace);
    art.met_rd = score_detection(art.log_rd, art.eval_collisions, art.eval_trace);
    art.met_ci = score_detection(art.log_ci, art.eval_collisions, art.eval_trace);
    return 0;
  });

  detail::run_stage("avoid", [&] {
    art.avoidance = evaluate_avoidance(
      art.eval_trace, art.eval_collisions, art.log_rfc, cfg.avoidance.latency,
      cfg.avoidance.decels, cfg.avoidance.drivers, cfg.avoidance.trials,
      cfg.seed);
    return 0;
  });

  detail::run_stage("metrics", [&] {
    nlohmann::json m;
    m["config_hash"] = detail::fnv1a_string(config_json.dump());
    m["seed"] = cfg.seed;
    std::set<VehicleId> train_ids;
    for (const auto & trk : art.dataset.tracks) train_ids.insert(trk.id);
    std::set<VehicleId> eval_ids;
    for (const auto & trk : eval_tracks) eval_ids.insert(trk.id);
    m["train_scenario"] =
      trace_summary_json(art.train_trace, art.train_collisions, train_ids.size());
    m["eval_scenario"] =
      trace_summary_json(art.eval_trace, art.eval_collisions, eval_ids.size());
    m["dataset"]["tracks"] = art.dataset.tracks.size();
    m["dataset"]["train_vehicles"] = art.dataset.split.train.size();
    m["dataset"]["val_vehicles"] = art.dataset.split.val.size();
    m["dataset"]["test_vehicles"] = art.dataset.split.test.size();
    m["dataset"]["train_windows"] = train_windows.size();
    m["dataset"]["val_windows"] = val_windows.size();
    m["models"]["point"] = history_to_json(art.point.history);
    m["models"]["quantile_lat"] = history_to_json(art.quantile_lat.history);
    m["models"]["quantile_lon"] = history_to_json(art.quantile_lon.history);
    m["trajectory"]["model"] = error_report_to_json(art.trajectories.model);
    m["trajectory"]["kalman"] = error_report_to_json(art.trajectories.kalman);
    m["trajectory"]["coverage"] = coverage_report_to_json(art.trajectories.coverage);
    m["trajectory"]["samples"] = art.trajectories.samples;
    m["trajectory"]["turning_samples"] = art.trajectories.turning_samples;
    m["thresholds"]["d_c"] = art.thresholds.d_c;
    m["thresholds"]["d2_c"] = art.thresholds.d2_c;
    m["thresholds"]["quantile"] = art.thresholds.quantile;
    m["pair_dataset"]["samples"] = pair_data.samples.size();
    std::size_t positives = 0;
    for (const auto & s : pair_data.samples) positives += s.label ? 1 : 0;
    m["pair_dataset"]["positives"] = positives;
    m["forest"]["dim"] = art.forest.dim;
    m["forest"]["trees"] = art.forest.trees.size();
    m["forest"]["importance_by_kind"] = importance_by_kind(art.forest);
    m["detection"]["random_forest"] = art.met_rfc.to_json();
    m["detection"]["relative_distance"] = art.met_rd.to_json();
    m["detection"]["ci_cws"] = art.met_ci.to_json();
    m["avoidance"] = art.avoidance.to_json();
    art.metrics = std::move(m);
    write_json_file(art.metrics, (out_dir / "metrics.json").string());
    return 0;
  });

  return art;
}

}  // namespace crossguard

#endif  // CROSSGUARD__EXPERIMENT_HPP_
