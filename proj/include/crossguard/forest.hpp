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

#ifndef CROSSGUARD__FOREST_HPP_
#define CROSSGUARD__FOREST_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "crossguard/common.hpp"
#include "crossguard/tensor_store.hpp"
#include "crossguard/trace_io.hpp"

namespace crossguard
{

struct RfcConfig
{
  int n_trees = 100;
  int max_depth = 0;              // 0 grows to purity
  int min_leaf = 1;
  int features_per_split = 0;     // 0 means floor(sqrt(dim))
  int candidate_thresholds = 32;  // per feature; 0 means exhaustive midpoints
  bool bootstrap = true;
  bool balanced_class_weight = true;
  std::uint64_t seed = 0;

  void validate() const
  {
    if (n_trees < 1) throw ConfigError("n_trees must be positive");
    if (min_leaf < 1) throw ConfigError("min_leaf must be positive");
    if (max_depth < 0) throw ConfigError("max_depth must be non-negative");
    if (features_per_split < 0) throw ConfigError("features_per_split must be non-negative");
    if (candidate_thresholds < 0) {
      throw ConfigError("candidate_thresholds must be non-negative");
    }
  }
};

inline RfcConfig rfc_config_from_json(const nlohmann::json & j)
{
  check_keys(
    j,
    {"n_trees", "max_depth", "min_leaf", "features_per_split", "candidate_thresholds",
      "bootstrap", "balanced_class_weight", "seed"},
    "rfc config");
  RfcConfig c;
  if (j.contains("n_trees")) c.n_trees = j.at("n_trees").get<int>();
  if (j.contains("max_depth")) c.max_depth = j.at("max_depth").get<int>();
  if (j.contains("min_leaf")) c.min_leaf = j.at("min_leaf").get<int>();
  if (j.contains("features_per_split")) {
    c.features_per_split = j.at("features_per_split").get<int>();
  }
  if (j.contains("candidate_thresholds")) {
    c.candidate_thresholds = j.at("candidate_thresholds").get<int>();
  }
  if (j.contains("bootstrap")) c.bootstrap = j.at("bootstrap").get<bool>();
  if (j.contains("balanced_class_weight")) {
    c.balanced_class_weight = j.at("balanced_class_weight").get<bool>();
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

inline nlohmann::json rfc_config_to_json(const RfcConfig & c)
{
  nlohmann::json j;
  j["n_trees"] = c.n_trees;
  j["max_depth"] = c.max_depth;
  j["min_leaf"] = c.min_leaf;
  j["features_per_split"] = c.features_per_split;
  j["candidate_thresholds"] = c.candidate_thresholds;
  j["bootstrap"] = c.bootstrap;
  j["balanced_class_weight"] = c.balanced_class_weight;
  j["seed"] = c.seed;
  return j;
}

/// One node; `feature < 0` marks a leaf. `w0`/`w1` hold the weighted class
/// mass that reached the node during training.
struct TreeNode
{
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double w0 = 0.0;
  double w1 = 0.0;
};

struct DecisionTree
{
  std::vector<TreeNode> nodes;

  int classify(const Eigen::VectorXd & x) const
  {
    int idx = 0;
    while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
      const auto & n = nodes[static_cast<std::size_t>(idx)];
      idx = x(n.feature) <= n.threshold ? n.left : n.right;
    }
    const auto & leaf = nodes[static_cast<std::size_t>(idx)];
    // Tied mass votes for the positive class.
    return leaf.w1 >= leaf.w0 ? 1 : 0;
  }
};

struct Classification
{
  int label = 0;
  double vote_fraction = 0.0;
};

namespace detail
{

inline double gini(double w0, double w1)
{
  const double w = w0 + w1;
  if (w <= 0.0) return 0.0;
  const double p0 = w0 / w;
  const double p1 = w1 / w;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitChoice
{
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;
};

}  // namespace detail

class Forest
{
public:
  RfcConfig config;
  int dim = 0;
  double class_weight0 = 1.0;
  double class_weight1 = 1.0;
  std::vector<DecisionTree> trees;
  Eigen::VectorXd importance;  // normalized to sum 1 (all zero if no splits)

  Classification classify(const Eigen::VectorXd & x) const
  {
    if (static_cast<int>(x.size()) != dim) {
      throw ContractError("feature vector dimension mismatch");
    }
    int votes = 0;
    for (const auto & t : trees) votes += t.classify(x);
    Classification out;
    out.vote_fraction =
      static_cast<double>(votes) / static_cast<double>(trees.size());
    // A tied vote alarms: missing a collision costs more than a false alarm.
    out.label = 2 * votes >= static_cast<int>(trees.size()) ? 1 : 0;
    return out;
  }

  void save(const std::filesystem::path & dir, const nlohmann::json & extra = {}) const
  {
    std::filesystem::create_directories(dir);
    TensorStore store;
    for (std::size_t i = 0; i < trees.size(); ++i) {
      const auto & nodes = trees[i].nodes;
      Eigen::MatrixXd m(static_cast<Eigen::Index>(nodes.size()), 6);
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto r = static_cast<Eigen::Index>(k);
        m(r, 0) = static_cast<double>(nodes[k].feature);
        m(r, 1) = nodes[k].threshold;
        m(r, 2) = static_cast<double>(nodes[k].left);
        m(r, 3) = static_cast<double>(nodes[k].right);
        m(r, 4) = nodes[k].w0;
        m(r, 5) = nodes[k].w1;
      }
      store.put("tree_" + std::to_string(i), m);
    }
    store.put("importance", importance);
    store.save((dir / "forest.bin").string());

    nlohmann::json meta;
    meta["kind"] = "forest";
    meta["dim"] = dim;
    meta["class_weight0"] = class_weight0;
    meta["class_weight1"] = class_weight1;
    meta["config"] = rfc_config_to_json(config);
    for (const auto & [key, value] : extra.items()) meta[key] = value;
    write_json_file(meta, (dir / "meta.json").string());
  }

  static Forest load(const std::filesystem::path & dir, nlohmann::json * meta_out = nullptr)
  {
    const auto meta = read_json_file((dir / "meta.json").string());
    if (!meta.contains("kind") || meta.at("kind").get<std::string>() != "forest") {
      throw SchemaError("not a forest checkpoint directory");
    }
    Forest f;
    f.dim = meta.at("dim").get<int>();
    f.class_weight0 = meta.at("class_weight0").get<double>();
    f.class_weight1 = meta.at("class_weight1").get<double>();
    f.config = rfc_config_from_json(meta.at("config"));

    TensorStore store = TensorStore::load((dir / "forest.bin").string());
    f.trees.resize(static_cast<std::size_t>(f.config.n_trees));
    for (std::size_t i = 0; i < f.trees.size(); ++i) {
      const Eigen::MatrixXd & m = store.get("tree_" + std::to_string(i));
      auto & nodes = f.trees[i].nodes;
      nodes.resize(static_cast<std::size_t>(m.rows()));
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto & n = nodes[static_cast<std::size_t>(r)];
        n.feature = static_cast<int>(m(r, 0));
        n.threshold = m(r, 1);
        n.left = static_cast<int>(m(r, 2));
        n.right = static_cast<int>(m(r, 3));
        n.w0 = m(r, 4);
        n.w1 = m(r, 5);
      }
    }
    f.importance = store.get("importance");
    if (meta_out != nullptr) *meta_out = meta;
    return f;
  }
};

namespace detail
{

class TreeBuilder
{
public:
  TreeBuilder(
    const Eigen::MatrixXd & x, const Eigen::VectorXi & y, const RfcConfig & config,
    double w0, double w1, rng::Engine & eng, Eigen::VectorXd & importance)
  : x_(x), y_(y), config_(config), cw0_(w0), cw1_(w1), eng_(eng), importance_(importance)
  {
  }

  DecisionTree build(std::vector<int> samples)
  {
    DecisionTree tree;
    root_mass_ = mass(samples).sum();
    grow(tree, std::move(samples), 0);
    return tree;
  }

private:
  Eigen::Vector2d mass(const std::vector<int> & samples) const
  {
    Eigen::Vector2d w{0.0, 0.0};
    for (const int s : samples) {
      if (y_(s) == 1) {
        w(1) += cw1_;
      } else {
        w(0) += cw0_;
      }
    }
    return w;
  }

  std::vector<int> feature_subset()
  {
    const int dim = static_cast<int>(x_.cols());
    int m = config_.features_per_split;
    if (m <= 0) {
      m = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(dim)))));
    }
    m = std::min(m, dim);
    std::vector<int> all(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) all[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < m; ++i) {
      const auto j = i + static_cast<int>(rng::uniform_index(
        eng_, static_cast<std::size_t>(dim - i)));
      std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
    }
    all.resize(static_cast<std::size_t>(m));
    return all;
  }

  SplitChoice best_split(const std::vector<int> & samples, const Eigen::Vector2d & w)
  {
    SplitChoice best;
    const double parent_gini = gini(w(0), w(1));
    const double total = w.sum();
    for (const int f : feature_subset()) {
      double minv = x_(samples.front(), f), maxv = minv;
      for (const int s : samples) {
        minv = std::min(minv, x_(s, f));
        maxv = std::max(maxv, x_(s, f));
      }
      if (maxv <= minv) continue;

      std::vector<double> candidates;
      if (config_.candidate_thresholds == 0) {
        std::vector<double> values;
        values.reserve(samples.size());
        for (const int s : samples) values.push_back(x_(s, f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
          candidates.push_back(0.5 * (values[i] + values[i + 1]));
        }
      } else {
        candidates.reserve(static_cast<std::size_t>(config_.candidate_thresholds));
        for (int i = 0; i < config_.candidate_thresholds; ++i) {
          candidates.push_back(rng::uniform(eng_, minv, maxv));
        }
      }

      for (const double thr : candidates) {
        double l0 = 0.0, l1 = 0.0;
        int lc = 0;
        for (const int s : samples) {
          if (x_(s, f) <= thr) {
            ++lc;
            if (y_(s) == 1) {
              l1 += cw1_;
            } else {
              l0 += cw0_;
            }
          }
        }
        const int rc = static_cast<int>(samples.size()) - lc;
        if (lc < config_.min_leaf || rc < config_.min_leaf) continue;
        const double r0 = w(0) - l0, r1 = w(1) - l1;
        const double decrease = parent_gini -
          ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / total;
        if (decrease > best.decrease + 1e-15) {
          best.found = true;
          best.feature = f;
          best.threshold = thr;
          best.decrease = decrease;
        }
      }
    }
    return best;
  }

  int grow(DecisionTree & tree, std::vector<int> samples, int depth)
  {
    const Eigen::Vector2d w = mass(samples);
    const int idx = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.w0 = w(0);
    node.w1 = w(1);
    tree.nodes.push_back(node);

    const bool pure = w(0) <= 0.0 || w(1) <= 0.0;
    const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
    const bool too_small = static_cast<int>(samples.size()) < 2 * config_.min_leaf;
    if (pure || depth_capped || too_small) return idx;

    const SplitChoice split = best_split(samples, w);
    if (!split.found || split.decrease <= 0.0) return idx;

    importance_(split.feature) += w.sum() / root_mass_ * split.decrease;

    std::vector<int> left, right;
    for (const int s : samples) {
      if (x_(s, split.feature) <= split.threshold) {
        left.push_back(s);
      } else {
        right.push_back(s);
      }
    }
    samples.clear();
    samples.shrink_to_fit();

    const int li = grow(tree, std::move(left), depth + 1);
    const int ri = grow(tree, std::move(right), depth + 1);
    tree.nodes[static_cast<std::size_t>(idx)].feature = split.feature;
    tree.nodes[static_cast<std::size_t>(idx)].threshold = split.threshold;
    tree.nodes[static_cast<std::size_t>(idx)].left = li;
    tree.nodes[static_cast<std::size_t>(idx)].right = ri;
    return idx;
  }

  const Eigen::MatrixXd & x_;
  const Eigen::VectorXi & y_;
  const RfcConfig & config_;
  double cw0_;
  double cw1_;
  rng::Engine & eng_;
  Eigen::VectorXd & importance_;
  double root_mass_ = 0.0;
};

}  // namespace detail

inline Forest train_rfc(
  const Eigen::MatrixXd & x, const Eigen::VectorXi & y, const RfcConfig & config)
{
  config.validate();
  const auto n = static_cast<int>(x.rows());
  if (n == 0 || y.size() != n) {
    throw TrainingError("forest training needs a non-empty aligned dataset");
  }
  int n1 = 0;
  for (int i = 0; i < n; ++i) {
    if (y(i) != 0 && y(i) != 1) throw TrainingError("labels must be 0 or 1");
    n1 += y(i);
  }
  const int n0 = n - n1;
  if (n0 == 0 || n1 == 0) {
    throw TrainingError("forest training needs both classes present");
  }

  Forest f;
  f.config = config;
  f.dim = static_cast<int>(x.cols());
  if (config.balanced_class_weight) {
    f.class_weight0 = static_cast<double>(n) / (2.0 * static_cast<double>(n0));
    f.class_weight1 = static_cast<double>(n) / (2.0 * static_cast<double>(n1));
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.dim);
  f.trees.reserve(static_cast<std::size_t>(config.n_trees));
  for (int i = 0; i < config.n_trees; ++i) {
    auto eng = rng::derive(config.seed, 0x8000u + static_cast<std::uint64_t>(i));
    std::vector<int> samples(static_cast<std::size_t>(n));
    if (config.bootstrap) {
      for (auto & s : samples) {
        s = static_cast<int>(rng::uniform_index(eng, static_cast<std::size_t>(n)));
      }
    } else {
      for (int s = 0; s < n; ++s) samples[static_cast<std::size_t>(s)] = s;
    }
    Eigen::VectorXd tree_imp = Eigen::VectorXd::Zero(f.dim);
    detail::TreeBuilder builder(
      x, y, config, f.class_weight0, f.class_weight1, eng, tree_imp);
    f.trees.push_back(builder.build(std::move(samples)));
    acc += tree_imp;
  }
  acc /= static_cast<double>(config.n_trees);
  const double total = acc.sum();
  f.importance = total > 0.0 ? Eigen::VectorXd(acc / total) : acc;
  return f;
}

}  // namespace crossguard

#endif  // CROSSGUARD__FOREST_HPP_
