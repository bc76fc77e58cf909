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

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "crossguard/common.hpp"
#include "crossguard/experiment.hpp"
#include "crossguard/report.hpp"
#include "crossguard/scenario.hpp"
#include "crossguard/trace_io.hpp"

namespace fs = std::filesystem;
using namespace crossguard;

namespace
{

struct GlobalOpts
{
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};

ScenarioConfig load_config(const GlobalOpts & g)
{
  ScenarioConfig cfg =
    g.config_path.empty() ? ScenarioConfig{} : load_scenario_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

/// Stage commands read the full pipeline configuration; a missing file
/// means defaults.
ExperimentConfig load_experiment(const GlobalOpts & g)
{
  ExperimentConfig cfg = g.config_path.empty()
    ? ExperimentConfig{}
    : load_experiment_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  return cfg;
}

IntersectionLayout layout_for(const ScenarioConfig & sc)
{
  return IntersectionLayout::make(
    sc.lanes_per_approach, sc.arm_length, sc.lane_width, sc.corner_setback, sc.vehicle_length,
    sc.vehicle_width);
}

FeatureLayoutInfo info_for(const ScenarioConfig & sc)
{
  FeatureLayoutInfo info;
  info.lane_card = sc.lanes_per_approach;
  info.edge_card = layout_for(sc).edge_count();
  return info;
}

void cmd_generate(const GlobalOpts & g)
{
  const ScenarioConfig cfg = load_config(g);
  fs::create_directories(g.out_dir);
  const auto out = generate_scenario(cfg);
  emit_trace_csv(out.trace, (fs::path(g.out_dir) / "trace.csv").string());

  const auto events = detect_ground_truth_collisions(out.trace);
  nlohmann::json j;
  j["tick_s"] = cfg.tick_s;
  j["vehicle_count"] = out.metas.size();
  nlohmann::json evs = nlohmann::json::array();
  for (const auto & e : events) {
    evs.push_back(
      {{"time_s", e.time_s},
       {"tick", e.tick},
       {"a", e.a},
       {"b", e.b},
       {"category", collision_category_name(e.category)}});
  }
  j["collisions"] = evs;
  nlohmann::json vm = nlohmann::json::array();
  for (const auto & m : out.metas) {
    vm.push_back(
      {{"id", m.id},
       {"route_index", m.route_index},
       {"ignore_priority", m.ignore_priority},
       {"constant_speed", m.constant_speed},
       {"desired_speed", m.desired_speed},
       {"spawn_tick", m.spawn_tick}});
  }
  j["vehicles"] = vm;
  write_json_file(j, (fs::path(g.out_dir) / "ground_truth.json").string());
  std::cout << "generate: " << out.metas.size() << " vehicles, " << events.size()
            << " collisions, trace at " << (fs::path(g.out_dir) / "trace.csv").string() << "\n";
}

void cmd_prepare(const GlobalOpts & g, std::string trace_path)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (trace_path.empty()) trace_path = (out / "train" / "trace.csv").string();
  const Trace trace = ingest_trace_csv(trace_path, cfg.scenario.tick_s);
  const auto collisions = detect_ground_truth_collisions(trace);
  const PreparedDataset ds = prepare_dataset(
    trace, collisions, info_for(cfg.scenario), cfg.pipeline.input_len,
    cfg.pipeline.horizon_len, cfg.pipeline.split_seed);
  fs::create_directories(out / "train");
  emit_trace_csv(trace, (out / "train" / "trace.csv").string());
  ds.save(out / "dataset");
  std::cout << "prepare: " << ds.tracks.size() << " tracks ("
            << ds.split.train.size() << " train / " << ds.split.val.size() << " val / "
            << ds.split.test.size() << " test), dataset at " << (out / "dataset").string()
            << "\n";
}

void cmd_train_point(const GlobalOpts & g, std::string data_dir)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (data_dir.empty()) data_dir = (out / "dataset").string();
  const PreparedDataset ds = PreparedDataset::load(data_dir);
  const auto train_w =
    enumerate_windows(ds.tracks, ds.train_tracks(), ds.input_len, ds.horizon_len);
  const auto val_w = enumerate_windows(ds.tracks, ds.val_tracks(), ds.input_len, ds.horizon_len);
  const PointModel model = train_point_model(
    ds.tracks, ds.scaler, train_w, val_w, ds.input_len, ds.horizon_len, cfg.point, cfg.seed);
  model.save(out / "models" / "point");
  std::cout << "train-point: " << model.history.epochs << " epochs ("
            << model.history.stop_reason << "), final val loss "
            << model.history.val_loss.back() << ", saved to "
            << (out / "models" / "point").string() << "\n";
}

void cmd_train_quantile(const GlobalOpts & g, std::string data_dir, const std::string & axis)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (data_dir.empty()) data_dir = (out / "dataset").string();
  const PreparedDataset ds = PreparedDataset::load(data_dir);
  const auto train_w =
    enumerate_windows(ds.tracks, ds.train_tracks(), ds.input_len, ds.horizon_len);
  const auto val_w = enumerate_windows(ds.tracks, ds.val_tracks(), ds.input_len, ds.horizon_len);
  const Axis ax = axis_from_name(axis);
  const std::uint64_t seed = cfg.seed + (ax == Axis::kLat ? 1 : 2);
  const QuantileModel model = train_quantile_model(
    ds.tracks, ds.scaler, train_w, val_w, ds.input_len, ds.horizon_len, ax, cfg.quantile, seed);
  const fs::path dir = out / "models" / ("quantile_" + axis);
  model.save(dir);
  std::cout << "train-quantile: axis " << axis << ", " << model.history.epochs << " epochs ("
            << model.history.stop_reason << "), saved to " << dir.string() << "\n";
}

void cmd_train_rfc(const GlobalOpts & g, std::string data_dir, std::string trace_path)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (data_dir.empty()) data_dir = (out / "dataset").string();
  if (trace_path.empty()) trace_path = (out / "train" / "trace.csv").string();
  const PreparedDataset ds = PreparedDataset::load(data_dir);
  const Trace trace = ingest_trace_csv(trace_path, ds.tick_s);
  const auto collisions = detect_ground_truth_collisions(trace);

  const PointModel point = PointModel::load(out / "models" / "point");
  const QuantileModel qlat = QuantileModel::load(out / "models" / "quantile_lat");
  const QuantileModel qlon = QuantileModel::load(out / "models" / "quantile_lon");
  const PredictionSet preds = predict_all(ds.tracks, ds.scaler, point, qlat, qlon);
  const double k_scale =
    k_epsilon(cfg.quantile.lower_q, cfg.quantile.upper_q, cfg.pipeline.k_epsilon_mode);

  std::vector<std::pair<VehicleId, VehicleId>> pairs;
  for (const CollisionEvent & ev : collisions) pairs.emplace_back(ev.a, ev.b);
  const DistanceThresholds thresholds =
    compute_distance_thresholds(trace, pairs, cfg.pipeline.threshold_quantile);

  const IntersectionLayout layout = layout_for(cfg.scenario);
  const PairDataset pd = build_pair_dataset(
    trace, collisions, preds, layout, thresholds, k_scale, cfg.pipeline.gating_m);
  pd.save(out / "pairs");

  RfcConfig rfc = cfg.rfc;
  if (rfc.seed == 0) rfc.seed = cfg.seed;
  const Forest forest = train_rfc(pd.feature_matrix(), pd.labels(), rfc);
  nlohmann::json extra;
  extra["d_c"] = thresholds.d_c;
  extra["d2_c"] = thresholds.d2_c;
  extra["threshold_quantile"] = thresholds.quantile;
  extra["k_scale"] = k_scale;
  extra["gating_m"] = cfg.pipeline.gating_m;
  extra["input_len"] = cfg.pipeline.input_len;
  extra["horizon_len"] = cfg.pipeline.horizon_len;
  forest.save(out / "models" / "forest", extra);

  std::size_t positives = 0;
  for (const auto & s : pd.samples) positives += s.label ? 1 : 0;
  std::cout << "train-rfc: " << pd.samples.size() << " pair samples (" << positives
            << " positive), " << forest.trees.size() << " trees, saved to "
            << (out / "models" / "forest").string() << "\n";
}

void cmd_detect(const GlobalOpts & g, std::string trace_path)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (trace_path.empty()) trace_path = (out / "eval" / "trace.csv").string();
  const Trace trace = ingest_trace_csv(trace_path, cfg.resolved_eval().tick_s);
  const auto collisions = detect_ground_truth_collisions(trace);

  const PreparedDataset ds = PreparedDataset::load(out / "dataset");
  const PointModel point = PointModel::load(out / "models" / "point");
  const QuantileModel qlat = QuantileModel::load(out / "models" / "quantile_lat");
  const QuantileModel qlon = QuantileModel::load(out / "models" / "quantile_lon");
  nlohmann::json forest_meta;
  const Forest forest = Forest::load(out / "models" / "forest", &forest_meta);
  const double k_scale = forest_meta.at("k_scale").get<double>();
  const double d_c = forest_meta.at("d_c").get<double>();
  const double gating_m = forest_meta.at("gating_m").get<double>();

  const auto tracks = build_feature_tracks(trace, ds.info);
  const PredictionSet preds = predict_all(tracks, ds.scaler, point, qlat, qlon);

  DetectionConfig det;
  det.sporadicity.k = cfg.pipeline.sporadicity_k;
  det.sporadicity.rearm_after = cfg.pipeline.rearm_after;
  det.gating_m = gating_m;
  const IntersectionLayout layout = layout_for(cfg.resolved_eval());
  const DetectionLog log_rfc = run_detection(trace, preds, forest, layout, k_scale, det);
  const DetectionLog log_rd = relative_distance_detect(trace, preds, d_c, gating_m);
  CiCwsConfig ci;
  ci.radius_m = cfg.pipeline.ci_cws_radius_m;
  ci.horizon_s = cfg.pipeline.ci_cws_horizon_s;
  ci.gating_m = gating_m;
  const DetectionLog log_ci = ci_cws_detect(trace, ci);

  fs::create_directories(out / "logs");
  log_rfc.save_jsonl((out / "logs" / "detect_random_forest.jsonl").string());
  log_rd.save_jsonl((out / "logs" / "detect_relative_distance.jsonl").string());
  log_ci.save_jsonl((out / "logs" / "detect_ci_cws.jsonl").string());

  nlohmann::json scored;
  scored["random_forest"] = score_detection(log_rfc, collisions, trace).to_json();
  scored["relative_distance"] = score_detection(log_rd, collisions, trace).to_json();
  scored["ci_cws"] = score_detection(log_ci, collisions, trace).to_json();
  write_json_file(scored, (out / "detection_metrics.json").string());

  std::cout << "detect: " << log_rfc.alarms().size() << " forest alarms, "
            << log_rd.alarms().size() << " relative-distance alarms, "
            << log_ci.alarms().size() << " ci-cws alarms; logs at " << (out / "logs").string()
            << "\n";
}

void cmd_avoid(
  const GlobalOpts & g, const std::string & trace_path, std::string alarms_path, int trials)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  if (trace_path.empty()) throw ConfigError("avoid needs --trace");
  if (alarms_path.empty()) {
    alarms_path = (out / "logs" / "detect_random_forest.jsonl").string();
  }
  const Trace trace = ingest_trace_csv(trace_path, cfg.resolved_eval().tick_s);
  const auto collisions = detect_ground_truth_collisions(trace);
  const DetectionLog log = DetectionLog::load_jsonl(alarms_path);
  const AvoidanceReport report = evaluate_avoidance(
    trace, collisions, log, cfg.avoidance.latency, cfg.avoidance.decels, cfg.avoidance.drivers,
    trials > 0 ? trials : cfg.avoidance.trials, cfg.seed);
  fs::create_directories(out);
  write_json_file(report.to_json(), (out / "avoidance.json").string());
  const std::size_t episodes =
    report.cells.empty() ? 0 : static_cast<std::size_t>(report.cells.front().episodes);
  std::cout << "avoid: " << episodes << " episode replays per cell across " << report.trials
            << " trials, report at " << (out / "avoidance.json").string() << "\n";
}

void cmd_report(const GlobalOpts & g)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  ReportInputs in;
  if (fs::exists(out / "metrics.json")) {
    in.metrics = read_json_file((out / "metrics.json").string());
  } else {
    // Staged bundles have no metrics.json; assemble what the stage
    // outputs provide so the figures that can render still do.
    in.metrics["config_hash"] = detail::fnv1a_string(cfg.to_json().dump());
    if (fs::exists(out / "detection_metrics.json")) {
      in.metrics["detection"] = read_json_file((out / "detection_metrics.json").string());
    }
    if (fs::exists(out / "avoidance.json")) {
      in.metrics["avoidance"] = read_json_file((out / "avoidance.json").string());
    }
    if (fs::exists(out / "models" / "forest" / "meta.json")) {
      const Forest forest = Forest::load(out / "models" / "forest");
      in.metrics["forest"]["importance_by_kind"] = importance_by_kind(forest);
    }
  }

  // The snapshot needs live objects; reload what the bundle directory has
  // and let the renderer skip the figure if anything is missing.
  Trace eval_trace;
  IntersectionLayout layout;
  PredictionSet preds;
  DetectionLog alarms;
  bool live = false;
  try {
    eval_trace = ingest_trace_csv(
      (out / "eval" / "trace.csv").string(), cfg.resolved_eval().tick_s);
    alarms = DetectionLog::load_jsonl((out / "logs" / "detect_random_forest.jsonl").string());
    const PreparedDataset ds = PreparedDataset::load(out / "dataset");
    const PointModel point = PointModel::load(out / "models" / "point");
    const QuantileModel qlat = QuantileModel::load(out / "models" / "quantile_lat");
    const QuantileModel qlon = QuantileModel::load(out / "models" / "quantile_lon");
    layout = layout_for(cfg.resolved_eval());
    std::set<VehicleId> hot;
    for (const DetectionRecord & r : alarms.records) {
      if (r.fired) {
        hot.insert(r.a);
        hot.insert(r.b);
        break;
      }
    }
    if (!hot.empty()) {
      const auto tracks = build_feature_tracks(eval_trace, ds.info);
      preds = predict_all(tracks, ds.scaler, point, qlat, qlon, &hot);
      live = true;
    }
  } catch (const std::exception &) {
    live = false;
  }
  if (live) {
    in.eval_trace = &eval_trace;
    in.layout = &layout;
    in.preds = &preds;
    in.alarms = &alarms;
  }

  const ReportOutput rendered = render_reports(in, out / "figures");
  std::cout << "report: " << rendered.written.size() << " files in "
            << (out / "figures").string() << "\n";
  for (const std::string & n : rendered.notices) std::cout << "  notice: " << n << "\n";
}

void cmd_run_all(const GlobalOpts & g)
{
  const ExperimentConfig cfg = load_experiment(g);
  const fs::path out(g.out_dir);
  const ExperimentArtifacts art = run_experiment(cfg, out);

  ReportInputs in;
  in.metrics = art.metrics;
  in.eval_trace = &art.eval_trace;
  in.layout = &art.layout;
  in.preds = &art.eval_preds;
  in.alarms = &art.log_rfc;
  const ReportOutput rendered = render_reports(in, out / "figures");

  const auto & det = art.metrics.at("detection");
  std::cout << "run-all: " << art.train_collisions.size() << " train / "
            << art.eval_collisions.size() << " eval collisions; forest detector "
            << det.at("random_forest").at("true_positives").get<int>() << " TP, "
            << det.at("random_forest").at("false_negatives").get<int>() << " FN, "
            << det.at("random_forest").at("false_positives").get<int>() << " FP; "
            << rendered.written.size() << " figure files; bundle at " << out.string() << "\n";
  for (const std::string & n : rendered.notices) std::cout << "  notice: " << n << "\n";
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Edge-side collision warning pipeline on synthetic intersection traffic"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "Scenario/pipeline config JSON");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--out", g.out_dir, "Output directory");

  std::string trace_path;
  std::string data_dir;
  std::string alarms_path;
  std::string axis = "lat";
  int trials = 0;

  app.add_subcommand("generate", "Simulate traffic and write the trace CSV");
  auto * prepare = app.add_subcommand("prepare", "Window a trace into model-ready tensors");
  prepare->add_option("--trace", trace_path, "Trace CSV (default <out>/train/trace.csv)");
  auto * train_point =
    app.add_subcommand("train-point", "Train the point trajectory model");
  train_point->add_option("--data", data_dir, "Dataset directory (default <out>/dataset)");
  auto * train_quantile = app.add_subcommand("train-quantile", "Train the interval model");
  train_quantile->add_option("--data", data_dir, "Dataset directory (default <out>/dataset)");
  train_quantile->add_option("--axis", axis, "Axis to train: lat or lon")->required();
  auto * train_rfc = app.add_subcommand("train-rfc", "Train the collision classifier");
  train_rfc->add_option("--data", data_dir, "Dataset directory (default <out>/dataset)");
  train_rfc->add_option("--trace", trace_path, "Trace CSV (default <out>/train/trace.csv)");
  auto * detect = app.add_subcommand("detect", "Run detection over a trace");
  detect->add_option("--trace", trace_path, "Trace CSV (default <out>/eval/trace.csv)");
  auto * avoid =
    app.add_subcommand("avoid", "Evaluate braking outcomes for detected collisions");
  avoid->add_option("--trace", trace_path, "Trace CSV the alarms refer to")->required();
  avoid->add_option(
    "--alarms", alarms_path, "Detection log (default <out>/logs/detect_random_forest.jsonl)");
  avoid->add_option("--trials", trials, "Latency trials per cell (default from config)");
  app.add_subcommand("report", "Render metrics and figures");
  app.add_subcommand("run-all", "Full pipeline: generate through report");

  // Global flags remain usable after the subcommand name.
  for (CLI::App * sub : app.get_subcommands(nullptr)) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "generate") {
      cmd_generate(g);
    } else if (sub == "prepare") {
      cmd_prepare(g, trace_path);
    } else if (sub == "train-point") {
      cmd_train_point(g, data_dir);
    } else if (sub == "train-quantile") {
      cmd_train_quantile(g, data_dir, axis);
    } else if (sub == "train-rfc") {
      cmd_train_rfc(g, data_dir, trace_path);
    } else if (sub == "detect") {
      cmd_detect(g, trace_path);
    } else if (sub == "avoid") {
      cmd_avoid(g, trace_path, alarms_path, trials);
    } else if (sub == "report") {
      cmd_report(g);
    } else {
      cmd_run_all(g);
    }
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
