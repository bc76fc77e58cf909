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

#ifndef CROSSGUARD__POINT_MODEL_HPP_
#define CROSSGUARD__POINT_MODEL_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossguard/nn.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

struct PointModelConfig
{
  int hidden_units = 300;
  int dense_units = 300;
  int batch_size = 48;
  double learning_rate = 1e-4;
  double early_stop_min_delta = 0.001;
  int early_stop_patience = 2;
  int max_epochs = 100;

  void validate() const
  {
    if (hidden_units <= 0 || dense_units <= 0 || batch_size <= 0 || max_epochs <= 0 ||
        learning_rate <= 0.0 || early_stop_patience <= 0 || early_stop_min_delta < 0.0) {
      throw ConfigError("point model config fields must be positive");
    }
  }
};

inline PointModelConfig point_config_from_json(const nlohmann::json & j)
{
  check_keys(
    j,
    {"hidden_units", "dense_units", "batch_size", "learning_rate", "early_stop_min_delta",
     "early_stop_patience", "max_epochs"},
    "point model config");
  PointModelConfig c;
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

inline nlohmann::json point_config_to_json(const PointModelConfig & c)
{
  nlohmann::json j;
  j["hidden_units"] = c.hidden_units;
  j["dense_units"] = c.dense_units;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["early_stop_min_delta"] = c.early_stop_min_delta;
  j["early_stop_patience"] = c.early_stop_patience;
  j["max_epochs"] = c.max_epochs;
  return j;
}

/// Recurrent encoder-decoder point predictor. The head emits standardized
/// coordinates; a fixed affine (the position columns of the feature scaler)
/// maps them to meters, so the squared-error loss and all reported errors are
/// in meters while the recurrence stays in standardized units.
class PointModel
{
public:
  PointModelConfig config;
  nn::Seq2Seq net;
  Eigen::Vector2d pos_mean = Eigen::Vector2d::Zero();  // (lat, lon)
  Eigen::Vector2d pos_std = Eigen::Vector2d::Ones();
  int input_len = 0;
  int horizon_len = 0;
  std::uint64_t seed = 0;
  std::uint64_t scaler_fingerprint = 0;
  nn::TrainHistory history;

  /// Squared-error loss of Eq-style form sum ||y - yhat||^2 / (N * L),
  /// in square meters.
  double batch_loss(
    const std::vector<Eigen::MatrixXd> & head, const std::vector<Eigen::MatrixXd> & targets) const
  {
    double acc = 0.0;
    const auto B = static_cast<double>(head.front().cols());
    for (std::size_t j = 0; j < head.size(); ++j) {
      const Eigen::MatrixXd yhat = to_meters(head[j]);
      acc += (yhat - targets[j]).array().square().sum();
    }
    return acc / (B * static_cast<double>(head.size()));
  }

  Eigen::MatrixXd to_meters(const Eigen::MatrixXd & head_std) const
  {
    Eigen::MatrixXd y = head_std;
    y.row(0) = (y.row(0).array() * pos_std(0) + pos_mean(0)).matrix();
    y.row(1) = (y.row(1).array() * pos_std(1) + pos_mean(1)).matrix();
    return y;
  }

  /// Predicts L future positions in meters from a standardized T x D window.
  /// Row order of the window matches FeatureTrack rows; columns 0/1 carry the
  /// standardized (lat, lon) used to bootstrap the decoder.
  Eigen::MatrixXd predict(const Eigen::MatrixXd & window_std) const
  {
    const auto batch = predict_batch(pack_windows({window_std}));
    Eigen::MatrixXd out(horizon_len, 2);
    for (int j = 0; j < horizon_len; ++j) out.row(j) = batch[static_cast<std::size_t>(j)].col(0).transpose();
    return out;
  }

  /// Batched inference: inputs T of D x B standardized; returns L of 2 x B in
  /// meters.
  std::vector<Eigen::MatrixXd> predict_batch(const std::vector<Eigen::MatrixXd> & inputs) const
  {
    if (static_cast<int>(inputs.size()) != input_len) {
      throw ContractError("window length mismatch");
    }
    Eigen::MatrixXd bootstrap = inputs.back().topRows(2);
    auto head = net.forward(inputs, bootstrap, horizon_len, nullptr);
    for (auto & h : head) h = to_meters(h);
    return head;
  }

  std::vector<Eigen::MatrixXd> pack_windows(const std::vector<Eigen::MatrixXd> & windows) const
  {
    if (windows.empty()) throw ContractError("no windows");
    const auto T = windows.front().rows();
    const auto D = windows.front().cols();
    if (static_cast<int>(T) != input_len) throw ContractError("window length mismatch");
    std::vector<Eigen::MatrixXd> inputs(
      static_cast<std::size_t>(T),
      Eigen::MatrixXd(D, static_cast<Eigen::Index>(windows.size())));
    for (std::size_t w = 0; w < windows.size(); ++w) {
      if (windows[w].rows() != T || windows[w].cols() != D) {
        throw ContractError("inconsistent window shapes");
      }
      for (Eigen::Index t = 0; t < T; ++t) {
        inputs[static_cast<std::size_t>(t)].col(static_cast<Eigen::Index>(w)) =
          windows[w].row(t).transpose();
      }
    }
    return inputs;
  }

  void save(const std::filesystem::path & dir) const
  {
    std::filesystem::create_directories(dir);
    TensorStore store;
    net.save_params(store, "");
    Eigen::MatrixXd affine(2, 2);
    affine.col(0) = pos_mean;
    affine.col(1) = pos_std;
    store.put("pos_affine", affine);
    store.save((dir / "params.bin").string());
    nlohmann::json meta;
    meta["kind"] = "point";
    meta["config"] = point_config_to_json(config);
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

  static PointModel load(const std::filesystem::path & dir)
  {
    const nlohmann::json meta = read_json_file((dir / "meta.json").string());
    if (meta.at("kind").get<std::string>() != "point") {
      throw SchemaError("checkpoint is not a point model");
    }
    PointModel m;
    m.config = point_config_from_json(meta.at("config"));
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
    const Eigen::MatrixXd affine = store.get("pos_affine");
    m.pos_mean = affine.col(0);
    m.pos_std = affine.col(1);
    return m;
  }
};

/// Trains the point model with Adam under squared-error loss. Deterministic
/// for a fixed seed: initialization, shuffling, and batch order all derive
/// from it.
inline PointModel train_point_model(
  const std::vector<FeatureTrack> & tracks, const Scaler & scaler,
  const std::vector<WindowRef> & train_windows, const std::vector<WindowRef> & val_windows,
  int input_len, int horizon_len, const PointModelConfig & config, std::uint64_t seed)
{
  config.validate();
  if (train_windows.empty() || val_windows.empty()) {
    throw TrainingError("point training needs non-empty train and validation windows");
  }
  PointModel model;
  model.config = config;
  model.input_len = input_len;
  model.horizon_len = horizon_len;
  model.seed = seed;
  model.scaler_fingerprint = nn::scaler_hash(scaler);
  model.pos_mean = Eigen::Vector2d(scaler.mean(0), scaler.mean(1));
  model.pos_std = Eigen::Vector2d(scaler.std(0), scaler.std(1));
  model.net.init(
    nn::Seq2SeqDims{scaler.info.dim(), config.hidden_units, config.dense_units, 2}, seed);

  nn::AdamOptimizer opt(config.learning_rate);
  nn::Seq2SeqAdam moments;
  moments.zero_like(model.net);
  nn::EarlyStopper stopper(config.early_stop_min_delta, config.early_stop_patience);

  std::vector<WindowRef> order = train_windows;
  const auto val_loss_fn = [&]() {
    double acc = 0.0;
    std::size_t n = 0;
    const std::size_t chunk = static_cast<std::size_t>(config.batch_size);
    for (std::size_t from = 0; from < val_windows.size(); from += chunk) {
      const std::size_t to = std::min(val_windows.size(), from + chunk);
      const auto batch =
        nn::make_window_batch(tracks, scaler, val_windows, from, to, input_len, horizon_len);
      const auto head = model.net.forward(batch.inputs, batch.bootstrap, horizon_len, nullptr);
      acc += model.batch_loss(head, batch.targets) * static_cast<double>(to - from);
      n += to - from;
    }
    return acc / static_cast<double>(n);
  };

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto g = rng::derive(seed, 0x200 + static_cast<std::uint64_t>(epoch));
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
      nn::Seq2SeqWorkspace ws;
      const auto head = model.net.forward(batch.inputs, batch.bootstrap, horizon_len, &ws);
      const double loss = model.batch_loss(head, batch.targets);
      if (!std::isfinite(loss)) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch + 1));
      }
      epoch_acc += loss * static_cast<double>(to - from);
      epoch_n += to - from;
      const double B = static_cast<double>(to - from);
      std::vector<Eigen::MatrixXd> dhead(head.size());
      for (std::size_t j = 0; j < head.size(); ++j) {
        const Eigen::MatrixXd yhat = model.to_meters(head[j]);
        Eigen::MatrixXd dy =
          (2.0 / (B * static_cast<double>(horizon_len))) * (yhat - batch.targets[j]);
        dy.row(0) *= model.pos_std(0);
        dy.row(1) *= model.pos_std(1);
        dhead[j] = std::move(dy);
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

}  // namespace crossguard

#endif  // CROSSGUARD__POINT_MODEL_HPP_
