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

#ifndef CROSSGUARD__QUANTILE_MODEL_HPP_
#define CROSSGUARD__QUANTILE_MODEL_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/nn.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

/// Asymmetric absolute-error loss whose minimizer is the q-quantile.
/// The kink at z = 0 takes the z >= 0 branch.
inline double pinball_loss(double z, double q)
{
  if (q <= 0.0 || q >= 1.0) throw ContractError("quantile must lie in (0, 1)");
  return z >= 0.0 ? q * z : (q - 1.0) * z;
}

/// Subgradient of pinball_loss with respect to z.
inline double pinball_slope(double z, double q)
{
  return z >= 0.0 ? q : q - 1.0;
}

enum class Axis
{
  kLat = 0,  // north coordinate
  kLon = 1,  // east coordinate
};

inline const char * axis_name(Axis a) { return a == Axis::kLat ? "lat" : "lon"; }

inline Axis axis_from_name(const std::string & s)
{
  if (s == "lat") return Axis::kLat;
  if (s == "lon") return Axis::kLon;
  throw ConfigError("axis must be lat or lon");
}

struct QuantileModelConfig
{
  double lower_q = 0.1;
  double upper_q = 0.9;
  int hidden_units = 320;
  int dense_units = 128;
  int batch_size = 48;
  double learning_rate = 1e-4;
  double early_stop_min_delta = 0.001;
  int early_stop_patience = 2;
  int max_epochs = 100;

  void validate() const
  {
    if (!(lower_q > 0.0 && lower_q < upper_q && upper_q < 1.0)) {
      throw ConfigError("quantiles must satisfy 0 < lower < upper < 1");
    }
    if (hidden_units <= 0 || dense_units <= 0 || batch_size <= 0 || max_epochs <= 0 ||
        learning_rate <= 0.0 || early_stop_patience <= 0 || early_stop_min_delta < 0.0) {
      throw ConfigError("quantile model config fields must be positive");
    }
  }
};

inline QuantileModelConfig quantile_config_from_json(const nlohmann::json & j)
{
  check_keys(
    j,
    {"lower_q", "upper_q", "hidden_units", "dense_units", "batch_size", "learning_rate",
     "early_stop_min_delta", "early_stop_patience", "max_epochs"},
    "quantile model config");
  QuantileModelConfig c;
  if (j.contains("lower_q")) c.lower_q = j.at("lower_q").get<double>();
  if (j.contains("upper_q")) c.upper_q = j.at("upper_q").get<double>();
  if (j.contains("hidden_units")) c.hidden_units = j.at("hidden_units").get<int>();
  if (j.contains("dense_units")) c.dense_units = j.at("dense_units").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("early_stop_min_delta")) {
    c.early_stop_min_delta = j.at("early_stop_min_delta").get<double>();
  }
  if (j.contains("early_stop_patience")) {
    c.early_stop_patience = j.at("early_stop_patience").get<int>();
  }
  if (j.contains("max_epochs")) c.max_epochs = j.at("max_epochs").get<int>();
  c.validate();
  return c;
}

inline nlohmann::json quantile_config_to_json(const QuantileModelConfig & c)
{
  nlohmann::json j;
  j["lower_q"] = c.lower_q;
  j["upper_q"] = c.upper_q;
  j["hidden_units"] = c.hidden_units;
  j["dense_units"] = c.dense_units;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["early_stop_min_delta"] = c.early_stop_min_delta;
  j["early_stop_patience"] = c.early_stop_patience;
  j["max_epochs"] = c.max_epochs;
  return j;
}

/// Lower/upper bound trajectories in meters; rows are future steps, columns
/// (lat, lon). After the crossing fix lower <= upper holds componentwise.
struct IntervalTrajectory
{
  Eigen::MatrixXd lower;  // L x 2
  Eigen::MatrixXd upper;  // L x 2
};

/// One-axis interval regressor: a single encoder-decoder whose head emits
/// both the lower and the upper quantile estimate for that axis; the pair of
/// previous estimates is the decoder feedback.
class QuantileModel
{
public:
  QuantileModelConfig config;
  Axis axis = Axis::kLat;
  nn::Seq2Seq net;
  double axis_mean = 0.0;
  double axis_std = 1.0;
  int input_len = 0;
  int horizon_len = 0;
  std::uint64_t seed = 0;
  std::uint64_t scaler_fingerprint = 0;
  nn::TrainHistory history;

  Eigen::MatrixXd to_meters(const Eigen::MatrixXd & head_std) const
  {
    return (head_std.array() * axis_std + axis_mean).matrix();
  }

  /// Mean pinball loss over both heads: sum of the two losses over all steps
  /// and sequences, divided by 2 N L. Heads and targets are in meters;
  /// targets: L of 1 x B (this axis only).
  double batch_loss(
    const std::vector<Eigen::MatrixXd> & head, const std::vector<Eigen::MatrixXd> & targets) const
  {
    double acc = 0.0;
    const auto B = static_cast<double>(head.front().cols());
    for (std::size_t j = 0; j < head.size(); ++j) {
      const Eigen::MatrixXd y = to_meters(head[j]);
      for (Eigen::Index col = 0; col < head[j].cols(); ++col) {
        acc += pinball_loss(targets[j](0, col) - y(0, col), config.lower_q);
        acc += pinball_loss(targets[j](0, col) - y(1, col), config.upper_q);
      }
    }
    return acc / (2.0 * B * static_cast<double>(head.size()));
  }

  /// Raw per-axis bounds for a batch; row 0 the lower head, row 1 the upper,
  /// both in meters, crossing not yet fixed.
  std::vector<Eigen::MatrixXd> predict_batch(const std::vector<Eigen::MatrixXd> & inputs) const
  {
    if (static_cast<int>(inputs.size()) != input_len) {
      throw ContractError("window length mismatch");
    }
    const Eigen::Index ax = static_cast<Eigen::Index>(axis);
    Eigen::MatrixXd bootstrap(2, inputs.back().cols());
    bootstrap.row(0) = inputs.back().row(ax);
    bootstrap.row(1) = inputs.back().row(ax);
    auto head = net.forward(inputs, bootstrap, horizon_len, nullptr);
    for (auto & h : head) h = to_meters(h);
    return head;
  }

  void save(const std::filesystem::path & dir) const
  {
    std::filesystem::create_directories(dir);
    TensorStore store;
    net.save_params(store, "");
    Eigen::MatrixXd affine(1, 2);
    affine(0, 0) = axis_mean;
    affine(0, 1) = axis_std;
    store.put("axis_affine", affine);
    store.save((dir / "params.bin").string());
    nlohmann::json meta;
    meta["kind"] = "quantile";
    meta["axis"] = axis_name(axis);
    meta["config"] = quantile_config_to_json(config);
    meta["residual_head"] = net.residual_head;
    meta["input_dim"] = net.enc.input_dim();
    meta["input_len"] = input_len;
    meta["horizon_len"] = horizon_len;
    meta["seed"] = seed;
    meta["scaler_fingerprint"] = scaler_fingerprint;
    meta["history"] = {
      {"train_loss", history.train_loss},
      {"val_loss", history.val_loss},
      {"epochs", history.epochs},
      {"stop_reason", history.stop_reason}};
    write_json_file(meta, (dir / "meta.json").string());
  }

  static QuantileModel load(const std::filesystem::path & dir)
  {
    const nlohmann::json meta = read_json_file((dir / "meta.json").string());
    if (meta.at("kind").get<std::string>() != "quantile") {
      throw SchemaError("checkpoint is not a quantile model");
    }
    QuantileModel m;
    m.axis = axis_from_name(meta.at("axis").get<std::string>());
    m.config = quantile_config_from_json(meta.at("config"));
    m.input_len = meta.at("input_len").get<int>();
    m.horizon_len = meta.at("horizon_len").get<int>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.scaler_fingerprint = meta.at("scaler_fingerprint").get<std::uint64_t>();
    m.history.train_loss = meta.at("history").at("train_loss").get<std::vector<double>>();
    m.history.val_loss = meta.at("history").at("val_loss").get<std::vector<double>>();
    m.history.epochs = meta.at("history").at("epochs").get<int>();
    m.history.stop_reason = meta.at("history").at("stop_reason").get<std::string>();
    const TensorStore store = TensorStore::load((dir / "params.bin").string());
    m.net.load_params(store, "");
    m.net.residual_head = meta.at("residual_head").get<bool>();
    const Eigen::MatrixXd affine = store.get("axis_affine");
    m.axis_mean = affine(0, 0);
    m.axis_std = affine(0, 1);
    return m;
  }
};

/// Trains a one-axis quantile model under the summed pinball loss.
inline QuantileModel train_quantile_model(
  const std::vector<FeatureTrack> & tracks, const Scaler & scaler,
  const std::vector<WindowRef> & train_windows, const std::vector<WindowRef> & val_windows,
  int input_len, int horizon_len, Axis axis, const QuantileModelConfig & config,
  std::uint64_t seed)
{
  config.validate();
  if (train_windows.empty() || val_windows.empty()) {
    throw TrainingError("quantile training needs non-empty train and validation windows");
  }
  QuantileModel model;
  model.config = config;
  model.axis = axis;
  model.input_len = input_len;
  model.horizon_len = horizon_len;
  model.seed = seed;
  model.scaler_fingerprint = nn::scaler_hash(scaler);
  const int ax = static_cast<int>(axis);
  model.axis_mean = scaler.mean(ax);
  model.axis_std = scaler.std(ax);
  model.net.init(
    nn::Seq2SeqDims{scaler.info.dim(), config.hidden_units, config.dense_units, 2},
    rng::derive(seed, 0x70 + static_cast<std::uint64_t>(ax))());

  nn::AdamOptimizer opt(config.learning_rate);
  nn::Seq2SeqAdam moments;
  moments.zero_like(model.net);
  nn::EarlyStopper stopper(config.early_stop_min_delta, config.early_stop_patience);

  const auto axis_targets = [ax](const nn::WindowBatch & batch) {
    std::vector<Eigen::MatrixXd> t(batch.targets.size());
    for (std::size_t j = 0; j < batch.targets.size(); ++j) t[j] = batch.targets[j].row(ax);
    return t;
  };
  const auto bootstrap_of = [ax](const nn::WindowBatch & batch) {
    Eigen::MatrixXd b(2, batch.bootstrap.cols());
    b.row(0) = batch.bootstrap.row(ax);
    b.row(1) = batch.bootstrap.row(ax);
    return b;
  };

  const auto val_loss_fn = [&]() {
    double acc = 0.0;
    std::size_t n = 0;
    const std::size_t chunk = static_cast<std::size_t>(config.batch_size);
    for (std::size_t from = 0; from < val_windows.size(); from += chunk) {
      const std::size_t to = std::min(val_windows.size(), from + chunk);
      const auto batch =
        nn::make_window_batch(tracks, scaler, val_windows, from, to, input_len, horizon_len);
      const auto head =
        model.net.forward(batch.inputs, bootstrap_of(batch), horizon_len, nullptr);
      acc += model.batch_loss(head, axis_targets(batch)) * static_cast<double>(to - from);
      n += to - from;
    }
    return acc / static_cast<double>(n);
  };

  std::vector<WindowRef> order = train_windows;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto g = rng::derive(seed, 0x300 + static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng::uniform_index(g, i)]);
    }
    double epoch_acc = 0.0;
    std::size_t epoch_n = 0;
    const std::size_t chunk = static_cast<std::size_t>(config.batch_size);
    for (std::size_t from = 0; from < order.size(); from += chunk) {
      const std::size_t to = std::min(order.size(), from + chunk);
      const auto batch =
        nn::make_window_batch(tracks, scaler, order, from, to, input_len, horizon_len);
      const auto targets = axis_targets(batch);
      nn::Seq2SeqWorkspace ws;
      const auto head = model.net.forward(batch.inputs, bootstrap_of(batch), horizon_len, &ws);
      const double loss = model.batch_loss(head, targets);
      if (!std::isfinite(loss)) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch + 1));
      }
      epoch_acc += loss * static_cast<double>(to - from);
      epoch_n += to - from;
      const double B = static_cast<double>(to - from);
      const double norm = 1.0 / (2.0 * B * static_cast<double>(horizon_len));
      std::vector<Eigen::MatrixXd> dhead(head.size());
      for (std::size_t j = 0; j < head.size(); ++j) {
        const Eigen::MatrixXd y = model.to_meters(head[j]);
        Eigen::MatrixXd dh(2, y.cols());
        for (Eigen::Index col = 0; col < y.cols(); ++col) {
          const double zl = targets[j](0, col) - y(0, col);
          const double zu = targets[j](0, col) - y(1, col);
          dh(0, col) = -pinball_slope(zl, config.lower_q) * norm * model.axis_std;
          dh(1, col) = -pinball_slope(zu, config.upper_q) * norm * model.axis_std;
        }
        dhead[j] = std::move(dh);
      }
      nn::Seq2SeqGrads grads;
      model.net.zero_grads(grads);
      model.net.backward(ws, dhead, grads);
      moments.apply(model.net, grads, opt);
    }
    model.history.train_loss.push_back(epoch_acc / static_cast<double>(epoch_n));
    const double vl = val_loss_fn();
    if (!std::isfinite(vl)) {
      throw TrainingError("validation loss diverged at epoch " + std::to_string(epoch + 1));
    }
    model.history.val_loss.push_back(vl);
    model.history.epochs = epoch + 1;
    if (stopper.update(vl)) {
      model.history.stop_reason = "early_stop";
      return model;
    }
  }
  model.history.stop_reason = "max_epochs";
  return model;
}

/// Assembles one batch column of lat/lon head outputs (meters) into an
/// interval trajectory, swapping any crossed pair so lower <= upper.
inline IntervalTrajectory assemble_intervals(
  const std::vector<Eigen::MatrixXd> & lat, const std::vector<Eigen::MatrixXd> & lon,
  Eigen::Index col = 0)
{
  const int L = static_cast<int>(lat.size());
  IntervalTrajectory out;
  out.lower.resize(L, 2);
  out.upper.resize(L, 2);
  for (int j = 0; j < L; ++j) {
    double ll = lat[static_cast<std::size_t>(j)](0, col);
    double lu = lat[static_cast<std::size_t>(j)](1, col);
    if (ll > lu) std::swap(ll, lu);
    double nl = lon[static_cast<std::size_t>(j)](0, col);
    double nu = lon[static_cast<std::size_t>(j)](1, col);
    if (nl > nu) std::swap(nl, nu);
    out.lower(j, 0) = ll;
    out.upper(j, 0) = lu;
    out.lower(j, 1) = nl;
    out.upper(j, 1) = nu;
  }
  return out;
}

/// Runs both axis models on one standardized window and assembles the
/// interval trajectory, swapping any crossed pair so lower <= upper.
inline IntervalTrajectory predict_intervals(
  const QuantileModel & lat_model, const QuantileModel & lon_model,
  const std::vector<Eigen::MatrixXd> & inputs, Eigen::Index col = 0)
{
  if (lat_model.axis != Axis::kLat || lon_model.axis != Axis::kLon) {
    throw ContractError("axis models passed in the wrong order");
  }
  if (lat_model.horizon_len != lon_model.horizon_len) {
    throw ContractError("axis models disagree on horizon length");
  }
  const auto lat = lat_model.predict_batch(inputs);
  const auto lon = lon_model.predict_batch(inputs);
  return assemble_intervals(lat, lon, col);
}

}  // namespace crossguard

#endif  // CROSSGUARD__QUANTILE_MODEL_HPP_
