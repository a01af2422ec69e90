#pragma once

// Binary decision trees shared by the CART classifier, the random forest and
// gradient boosting. Growth is generic over the split statistic: Gini for
// classification, squared error for boosting residuals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/matrix.hpp"
#include "voteml/random.hpp"

namespace voteml {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // rows with x[feature] <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;  // leaf output
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::size_t n_features = 0;

  double evaluate(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf())
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold
                                       ? nodes[i].left
                                       : nodes[i].right);
    return nodes[i].value;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
  }

  std::size_t depth() const { return nodes.empty() ? 0 : depth_from(0); }

  nlohmann::json to_json() const { return {{"n_features", n_features}, {"root", node_json(0)}}; }

  static DecisionTree from_json(const nlohmann::json& j) {
    DecisionTree t;
    t.n_features = j.at("n_features").get<std::size_t>();
    t.read_node(j.at("root"));
    return t;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    if (nodes[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(static_cast<std::size_t>(nodes[i].left)),
                        depth_from(static_cast<std::size_t>(nodes[i].right)));
  }

  nlohmann::json node_json(std::size_t i) const {
    const auto& n = nodes[i];
    if (n.is_leaf()) return {{"value", n.value}, {"samples", n.samples}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"samples", n.samples},
            {"left", node_json(static_cast<std::size_t>(n.left))},
            {"right", node_json(static_cast<std::size_t>(n.right))}};
  }

  // Rebuilds in preorder; node ids may differ from the grown tree, the
  // routing does not.
  std::int32_t read_node(const nlohmann::json& j) {
    const auto id = static_cast<std::int32_t>(nodes.size());
    nodes.emplace_back();
    nodes.back().samples = j.value("samples", std::size_t{0});
    if (j.contains("value")) {
      nodes.back().value = j.at("value").get<double>();
      return id;
    }
    nodes.back().feature = j.at("feature").get<std::int32_t>();
    nodes.back().threshold = j.at("threshold").get<double>();
    const auto l = read_node(j.at("left"));
    const auto r = read_node(j.at("right"));
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
    return id;
  }
};

// ---------------------------------------------------------------------------
// Split statistics. cost() is additive over children and minimised.

/// n * Gini impurity of a node holding 0/1 targets.
struct GiniStats {
  double n = 0.0;
  double positives = 0.0;

  void add(double target) {
    n += 1.0;
    positives += target;
  }
  GiniStats operator-(const GiniStats& o) const { return {n - o.n, positives - o.positives}; }
  double cost() const { return n > 0 ? 2.0 * positives * (n - positives) / n : 0.0; }
  bool pure() const { return positives == 0.0 || positives == n; }
};

/// Squared error up to the constant sum of squares: -sum^2 / n.
struct SquaredErrorStats {
  double n = 0.0;
  double sum = 0.0;

  void add(double target) {
    n += 1.0;
    sum += target;
  }
  SquaredErrorStats operator-(const SquaredErrorStats& o) const { return {n - o.n, sum - o.sum}; }
  double cost() const { return n > 0 ? -sum * sum / n : 0.0; }
  bool pure() const { return false; }
};

/// Gini impurity of a labelled set, 1 - sum p_c^2.
inline double gini_impurity(std::span<const std::uint8_t> labels) {
  if (labels.empty()) return 0.0;
  double pos = 0;
  for (auto v : labels) pos += v;
  const double p = pos / static_cast<double>(labels.size());
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

/// Size-weighted mean Gini impurity of two children.
inline double weighted_gini(std::span<const std::uint8_t> left, std::span<const std::uint8_t> right) {
  const double n = static_cast<double>(left.size() + right.size());
  if (n == 0) return 0.0;
  return (static_cast<double>(left.size()) * gini_impurity(left) +
          static_cast<double>(right.size()) * gini_impurity(right)) / n;
}

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double cost = 0.0;
  bool found = false;
};

/// Exhaustive search over the given features, thresholds at midpoints of
/// consecutive distinct values. Ties keep the first candidate met, i.e. the
/// lower feature index and then the lower threshold.
template <class Stats>
SplitChoice best_split(const FeatureMatrix& x, std::span<const std::size_t> rows, std::span<const double> target,
                       std::span<const std::size_t> features, std::size_t min_leaf) {
  SplitChoice best;
  Stats total;
  for (auto r : rows) total.add(target[r]);
  std::vector<std::pair<double, std::size_t>> sorted(rows.size());
  const std::size_t min_side = std::max<std::size_t>(min_leaf, 1);

  for (auto f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {x(rows[i], f), rows[i]};
    std::sort(sorted.begin(), sorted.end());
    Stats left;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
      left.add(target[sorted[i].second]);
      const double lo = sorted[i].first, hi = sorted[i + 1].first;
      if (!(lo < hi)) continue;
      if (i + 1 < min_side || sorted.size() - (i + 1) < min_side) continue;
      const double cost = left.cost() + (total - left).cost();
      const double slack = 1e-12 * std::max(1.0, std::abs(best.cost));
      if (!best.found || cost < best.cost - slack) {
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid < hi)) mid = lo;
        best = {f, mid, cost, true};
      }
    }
  }
  return best;
}

struct TreeGrowth {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_leaves = 0;    // leaf-wise growth only; 0 = unlimited
  std::size_t max_features = 0;  // features tried per node; 0 = all
  bool leaf_wise = false;
  bool require_gain = false;  // refuse splits that do not lower the cost
};

namespace detail {

inline std::vector<std::size_t> node_features(std::size_t d, std::size_t max_features, Rng* rng) {
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (max_features == 0 || max_features >= d || rng == nullptr) return all;
  for (std::size_t i = 0; i < max_features; ++i) {
    const auto j = i + static_cast<std::size_t>(rng->below(d - i));
    std::swap(all[i], all[j]);
  }
  all.resize(max_features);
  std::sort(all.begin(), all.end());
  return all;
}

template <class Stats>
struct Candidate {
  std::size_t node = 0;
  std::vector<std::size_t> rows;
  std::size_t depth = 0;
  SplitChoice split;
  double gain = 0.0;
};

}  // namespace detail

/// Grows one tree. `rows` may repeat indices (bootstrap samples). `leaf_value`
/// maps a leaf's rows to its output.
template <class Stats, class LeafFn>
DecisionTree grow_tree(const FeatureMatrix& x, std::vector<std::size_t> rows, std::span<const double> target,
                       const TreeGrowth& growth, Rng* rng, LeafFn&& leaf_value) {
  DecisionTree tree;
  tree.n_features = x.cols();
  const std::size_t min_leaf = std::max<std::size_t>(growth.min_samples_leaf, 1);

  auto stats_of = [&](const std::vector<std::size_t>& rs) {
    Stats s;
    for (auto r : rs) s.add(target[r]);
    return s;
  };
  auto make_leaf = [&](std::size_t node, const std::vector<std::size_t>& rs) {
    tree.nodes[node].value = leaf_value(std::span<const std::size_t>(rs));
    tree.nodes[node].samples = rs.size();
  };
  // Returns the split to apply, or nothing if the node must stay a leaf.
  auto choose = [&](const std::vector<std::size_t>& rs, std::size_t depth, double* gain) -> std::optional<SplitChoice> {
    if (growth.max_depth != 0 && depth >= growth.max_depth) return std::nullopt;
    if (rs.size() < 2 * min_leaf) return std::nullopt;
    const Stats s = stats_of(rs);
    if (s.pure()) return std::nullopt;
    const auto features = detail::node_features(x.cols(), growth.max_features, rng);
    const auto split = best_split<Stats>(x, rs, target, features, min_leaf);
    if (!split.found) return std::nullopt;
    const double g = s.cost() - split.cost;
    if (growth.require_gain && !(g > 1e-12 * std::max(1.0, std::abs(s.cost())))) return std::nullopt;
    if (gain) *gain = g;
    return split;
  };
  auto partition = [&](const std::vector<std::size_t>& rs, const SplitChoice& sp) {
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (auto r : rs) (x(r, sp.feature) <= sp.threshold ? out.first : out.second).push_back(r);
    return out;
  };
  auto apply_split = [&](std::size_t node, const SplitChoice& sp, std::size_t samples) {
    tree.nodes[node].feature = static_cast<std::int32_t>(sp.feature);
    tree.nodes[node].threshold = sp.threshold;
    tree.nodes[node].samples = samples;
  };

  tree.nodes.emplace_back();
  if (!growth.leaf_wise) {
    struct Frame {
      std::size_t node;
      std::vector<std::size_t> rows;
      std::size_t depth;
    };
    // Explicit stack; children are pushed right-then-left so ids come out in preorder.
    std::vector<Frame> stack;
    stack.push_back({0, std::move(rows), 0});
    while (!stack.empty()) {
      Frame fr = std::move(stack.back());
      stack.pop_back();
      const auto split = choose(fr.rows, fr.depth, nullptr);
      if (!split) {
        make_leaf(fr.node, fr.rows);
        continue;
      }
      auto [l, r] = partition(fr.rows, *split);
      apply_split(fr.node, *split, fr.rows.size());
      const auto li = tree.nodes.size();
      tree.nodes.emplace_back();
      const auto ri = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes[fr.node].left = static_cast<std::int32_t>(li);
      tree.nodes[fr.node].right = static_cast<std::int32_t>(ri);
      stack.push_back({ri, std::move(r), fr.depth + 1});
      stack.push_back({li, std::move(l), fr.depth + 1});
    }
    return tree;
  }

  // Leaf-wise: repeatedly split the open leaf with the largest gain.
  std::vector<detail::Candidate<Stats>> open;
  auto consider = [&](std::size_t node, std::vector<std::size_t> rs, std::size_t depth) {
    detail::Candidate<Stats> c{node, std::move(rs), depth, {}, 0.0};
    double gain = 0.0;
    if (auto sp = choose(c.rows, depth, &gain)) {
      c.split = *sp;
      c.gain = gain;
    }
    open.push_back(std::move(c));
  };
  consider(0, std::move(rows), 0);
  std::size_t leaves = 1;
  while (growth.max_leaves == 0 || leaves < growth.max_leaves) {
    std::size_t pick = open.size();
    for (std::size_t i = 0; i < open.size(); ++i) {
      if (!open[i].split.found) continue;
      if (pick == open.size() || open[i].gain > open[pick].gain ||
          (open[i].gain == open[pick].gain && open[i].node < open[pick].node))
        pick = i;
    }
    if (pick == open.size()) break;
    auto cand = std::move(open[pick]);
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    auto [l, r] = partition(cand.rows, cand.split);
    apply_split(cand.node, cand.split, cand.rows.size());
    const auto li = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto ri = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes[cand.node].left = static_cast<std::int32_t>(li);
    tree.nodes[cand.node].right = static_cast<std::int32_t>(ri);
    consider(li, std::move(l), cand.depth + 1);
    consider(ri, std::move(r), cand.depth + 1);
    ++leaves;
  }
  for (const auto& c : open) make_leaf(c.node, c.rows);
  return tree;
}

// ---------------------------------------------------------------------------
// CART classifier

struct TreeHyper {
  std::size_t max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;  // 0 = all features at every node
};

struct TreeModel {
  static constexpr std::string_view kKind = "tree";

  DecisionTree tree;

  std::size_t n_features() const { return tree.n_features; }

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    std::vector<double> p(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) p[r] = tree.evaluate(x.row(r));
    return p;
  }

  nlohmann::json to_json() const { return {{"kind", kKind}, {"tree", tree.to_json()}}; }
  static TreeModel from_json(const nlohmann::json& j) { return {DecisionTree::from_json(j.at("tree"))}; }

  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

/// Grows a Gini CART tree on the given (possibly repeated) row indices.
inline TreeModel fit_tree_rows(const FeatureMatrix& x, const LabelVector& y, std::vector<std::size_t> rows,
                               const TreeHyper& hyper, std::uint64_t seed) {
  std::vector<double> target(y.begin(), y.end());
  TreeGrowth growth;
  growth.max_depth = hyper.max_depth;
  growth.min_samples_leaf = hyper.min_samples_leaf;
  growth.max_features = hyper.max_features;
  Rng rng(seed);
  auto leaf = [&](std::span<const std::size_t> rs) {
    double pos = 0;
    for (auto r : rs) pos += target[r];
    return rs.empty() ? 0.0 : pos / static_cast<double>(rs.size());
  };
  return {grow_tree<GiniStats>(x, std::move(rows), target, growth, &rng, leaf)};
}

inline TreeModel fit_tree(const FeatureMatrix& x, const LabelVector& y, const TreeHyper& hyper, std::uint64_t seed) {
  check_xy(x, y);
  require(x.rows() > 0, ErrorCode::InvalidArgument, "empty training set");
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return fit_tree_rows(x, y, std::move(rows), hyper, seed);
}

using DecisionTreeClassifier = ModelClassifier<TreeModel, TreeHyper, fit_tree>;

}  // namespace voteml
