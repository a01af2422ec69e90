#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/learners/tree.hpp"
#include "voteml/random.hpp"

namespace voteml {

struct ForestHyper {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = ceil(sqrt(d))
  bool bootstrap = true;
  std::size_t n_threads = 1;
};

struct ForestModel {
  static constexpr std::string_view kKind = "forest";

  std::vector<TreeModel> trees;
  std::vector<std::uint64_t> tree_seeds;

  std::size_t n_features() const { return trees.empty() ? 0 : trees.front().n_features(); }

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    std::vector<double> p(x.rows(), 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      double s = 0.0;
      for (const auto& t : trees) s += t.tree.evaluate(x.row(r));
      p[r] = s / static_cast<double>(trees.size());
    }
    return p;
  }

  nlohmann::json to_json() const {
    nlohmann::json ts = nlohmann::json::array();
    for (const auto& t : trees) ts.push_back(t.tree.to_json());
    return {{"kind", kKind}, {"tree_seeds", tree_seeds}, {"trees", ts}};
  }
  static ForestModel from_json(const nlohmann::json& j) {
    ForestModel m;
    m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& t : j.at("trees")) m.trees.push_back({DecisionTree::from_json(t)});
    return m;
  }

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

inline std::size_t default_max_features(std::size_t d) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

/// Bagged CART trees. Tree i uses the stream derive_seed(seed, i) for both
/// its bootstrap sample and its per-node feature draws, so the fitted forest
/// is the same for any thread count.
inline ForestModel fit_forest(const FeatureMatrix& x, const LabelVector& y, const ForestHyper& hyper,
                              std::uint64_t seed) {
  check_xy(x, y);
  require(hyper.n_trees >= 1, ErrorCode::InvalidArgument, "n_trees must be at least 1");
  require(x.rows() > 0, ErrorCode::InvalidArgument, "empty training set");

  TreeHyper th;
  th.max_depth = hyper.max_depth;
  th.min_samples_leaf = hyper.min_samples_leaf;
  th.max_features = hyper.max_features ? hyper.max_features : default_max_features(x.cols());

  ForestModel m;
  m.trees.resize(hyper.n_trees);
  m.tree_seeds.resize(hyper.n_trees);
  for (std::size_t i = 0; i < hyper.n_trees; ++i) m.tree_seeds[i] = derive_seed(seed, i);

  auto build = [&](std::size_t i) {
    Rng sampler(derive_seed(m.tree_seeds[i], 0));
    std::vector<std::size_t> rows(x.rows());
    for (std::size_t r = 0; r < rows.size(); ++r)
      rows[r] = hyper.bootstrap ? static_cast<std::size_t>(sampler.below(x.rows())) : r;
    m.trees[i] = fit_tree_rows(x, y, std::move(rows), th, derive_seed(m.tree_seeds[i], 1));
  };

  const std::size_t n_threads = std::clamp<std::size_t>(hyper.n_threads, 1, hyper.n_trees);
  if (n_threads == 1) {
    for (std::size_t i = 0; i < hyper.n_trees; ++i) build(i);
    return m;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < n_threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < hyper.n_trees; i = next++) build(i);
    });
  workers.clear();
  return m;
}

using RandomForest = ModelClassifier<ForestModel, ForestHyper, fit_forest>;

}  // namespace voteml
