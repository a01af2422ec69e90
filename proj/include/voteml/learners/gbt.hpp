#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/learners/tree.hpp"

namespace voteml {

enum class GbtPreset { XgbLike, LgbmLike };

inline std::string_view to_string(GbtPreset p) { return p == GbtPreset::XgbLike ? "xgb-like" : "lgbm-like"; }

struct GbtHyper {
  GbtPreset preset = GbtPreset::XgbLike;
  std::size_t n_rounds = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;   // level-wise limit; also caps leaf-wise growth when non-zero
  std::size_t max_leaves = 31; // leaf-wise only
  std::size_t min_samples_leaf = 1;
  double lambda = 1.0;  // L2 term in the Newton leaf denominator

  static GbtHyper xgb_like() { return {}; }
  static GbtHyper lgbm_like() {
    GbtHyper h;
    h.preset = GbtPreset::LgbmLike;
    h.max_depth = 0;
    h.max_leaves = 31;
    h.min_samples_leaf = 20;
    return h;
  }
};

struct GbtModel {
  static constexpr std::string_view kKind = "gbt";

  GbtPreset preset = GbtPreset::XgbLike;
  double initial_log_odds = 0.0;
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;
  std::vector<double> train_loss;  // mean log-loss after F0 and after each round

  std::size_t feature_count = 0;

  std::size_t n_features() const { return feature_count; }

  /// Raw score using only the first `rounds` trees.
  double raw_score(std::span<const double> row, std::size_t rounds) const {
    double s = 0.0;
    for (std::size_t m = 0; m < std::min(rounds, trees.size()); ++m) s += trees[m].evaluate(row);
    return initial_log_odds + learning_rate * s;
  }

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    std::vector<double> p(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) p[r] = sigmoid(raw_score(x.row(r), trees.size()));
    return p;
  }

  nlohmann::json to_json() const {
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : trees) ts.push_back(t.to_json());
    return {{"kind", kKind},          {"preset", to_string(preset)},   {"n_features", n_features()},
            {"initial_log_odds", initial_log_odds}, {"learning_rate", learning_rate}, {"train_loss", train_loss},
            {"trees", ts}};
  }
  static GbtModel from_json(const nlohmann::json& j) {
    GbtModel m;
    m.preset = j.at("preset").get<std::string>() == "lgbm-like" ? GbtPreset::LgbmLike : GbtPreset::XgbLike;
    m.feature_count = j.at("n_features").get<std::size_t>();
    m.initial_log_odds = j.at("initial_log_odds").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.train_loss = j.at("train_loss").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) m.trees.push_back(DecisionTree::from_json(t));
    return m;
  }

};

inline double mean_log_loss(std::span<const double> raw, const LabelVector& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) s += logit_loss(raw[i], y[i]);
  return raw.empty() ? 0.0 : s / static_cast<double>(raw.size());
}

/// Newton step for one leaf, sum(r) / (sum(h) + lambda) with r = y - p and
/// h = p (1 - p), halved until the leaf's own log-loss does not increase
/// under the shrunken update. Each row sits in exactly one leaf, so the
/// round's training loss cannot go up.
inline double newton_leaf_value(std::span<const std::size_t> rows, std::span<const double> raw,
                                const LabelVector& y, double lambda, double learning_rate) {
  double g = 0.0, h = 0.0;
  for (auto r : rows) {
    const double p = sigmoid(raw[r]);
    g += y[r] - p;
    h += p * (1.0 - p);
  }
  const double denom = h + lambda;
  if (!(denom > 0.0) || g == 0.0) return 0.0;
  double value = g / denom;
  auto leaf_loss = [&](double v) {
    double s = 0.0;
    for (auto r : rows) s += logit_loss(raw[r] + learning_rate * v, y[r]);
    return s;
  };
  const double base = leaf_loss(0.0);
  for (int i = 0; i < 60 && leaf_loss(value) > base; ++i) value *= 0.5;
  if (leaf_loss(value) > base) value = 0.0;
  return value;
}

inline GbtModel fit_gbt(const FeatureMatrix& x, const LabelVector& y, const GbtHyper& hyper, std::uint64_t /*seed*/) {
  check_xy(x, y);
  require(hyper.n_rounds >= 1, ErrorCode::InvalidArgument, "n_rounds must be at least 1");
  require(x.rows() > 0, ErrorCode::InvalidArgument, "empty training set");
  require(hyper.lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be non-negative");

  GbtModel m;
  m.preset = hyper.preset;
  m.learning_rate = hyper.learning_rate;
  m.feature_count = x.cols();

  double pos = 0;
  for (auto v : y) pos += v;
  const double prior = std::clamp(pos / static_cast<double>(y.size()), 1e-15, 1.0 - 1e-15);
  m.initial_log_odds = std::log(prior / (1.0 - prior));

  std::vector<double> raw(x.rows(), m.initial_log_odds);
  std::vector<double> residual(x.rows());
  m.train_loss.push_back(mean_log_loss(raw, y));

  TreeGrowth growth;
  growth.leaf_wise = hyper.preset == GbtPreset::LgbmLike;
  growth.max_depth = hyper.max_depth;
  growth.max_leaves = growth.leaf_wise ? hyper.max_leaves : 0;
  growth.min_samples_leaf = hyper.min_samples_leaf;
  growth.require_gain = true;

  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (std::size_t round = 0; round < hyper.n_rounds; ++round) {
    for (std::size_t i = 0; i < raw.size(); ++i) residual[i] = y[i] - sigmoid(raw[i]);
    auto leaf = [&](std::span<const std::size_t> rows) {
      return newton_leaf_value(rows, raw, y, hyper.lambda, hyper.learning_rate);
    };
    auto tree = grow_tree<SquaredErrorStats>(x, all, residual, growth, nullptr, leaf);
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += hyper.learning_rate * tree.evaluate(x.row(i));
    const double loss = mean_log_loss(raw, y);
    if (!std::isfinite(loss))
      fail(ErrorCode::NonFiniteLoss, "boosting diverged at round " + std::to_string(round));
    m.train_loss.push_back(loss);
    m.trees.push_back(std::move(tree));
  }
  return m;
}

using GradientBoosting = ModelClassifier<GbtModel, GbtHyper, fit_gbt>;

}  // namespace voteml
