#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "voteml/learners/registry.hpp"

using namespace voteml;

namespace {

double accuracy(const LabelVector& truth, const LabelVector& pred) {
  double hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == pred[i];
  return hit / static_cast<double>(truth.size());
}

void one_d_separable(FeatureMatrix& x, LabelVector& y) {
  std::vector<std::vector<double>> rows;
  y.clear();
  for (int i = 0; i < 20; ++i) {
    rows.push_back({-1.0});
    y.push_back(0);
    rows.push_back({1.0});
    y.push_back(1);
  }
  x = FeatureMatrix::from_rows(rows);
}

FeatureMatrix xor_data(LabelVector& y) {
  std::vector<std::vector<double>> rows;
  y.clear();
  for (int rep = 0; rep < 5; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        rows.push_back({double(a), double(b)});
        y.push_back(static_cast<std::uint8_t>(a ^ b));
      }
  return FeatureMatrix::from_rows(rows);
}

}  // namespace

// ---------------------------------------------------------------------------
// predict

TEST(Predict, ThresholdRule) {
  const std::vector<double> p{0.2, 0.5, 0.9};
  EXPECT_EQ(predict(p, 0.5), (LabelVector{0, 1, 1}));
  EXPECT_EQ(predict(p, 0.0), (LabelVector{1, 1, 1}));
  EXPECT_EQ(predict(std::vector<double>{0.999999, 1.0}, 1.0), (LabelVector{0, 1}));
}

TEST(Predict, DimensionMismatch) {
  FeatureMatrix x;
  LabelVector y;
  one_d_separable(x, y);
  LogisticRegression m;
  m.fit(x, y, 1);
  try {
    m.predict_proba(FeatureMatrix(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

// ---------------------------------------------------------------------------
// logistic regression

TEST(Logistic, SeparableOneD) {
  FeatureMatrix x;
  LabelVector y;
  one_d_separable(x, y);
  LogisticRegression m;
  m.fit(x, y, 0);
  EXPECT_EQ(accuracy(y, predict(m, x)), 1.0);
}

TEST(Logistic, ZeroEpochs) {
  FeatureMatrix x;
  LabelVector y;
  one_d_separable(x, y);
  LogisticHyper h;
  h.epochs = 0;
  LogisticRegression m(h);
  m.fit(x, y, 0);
  EXPECT_EQ(m.predict_proba(FeatureMatrix(3, 1))[0], 0.5);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testutil::random_matrix(30, 4, 2.0, rng);
    const auto y = testutil::random_labels(30, rng);
    std::vector<double> w(4);
    for (auto& v : w) v = rng.uniform(-1, 1);
    const double b = rng.uniform(-1, 1), l2 = 0.1;
    const auto g = logistic_loss_gradient(x, y, w, b, l2);
    const double h = 1e-5;
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto up = w, down = w;
      up[k] += h;
      down[k] -= h;
      const double num = (logistic_loss_gradient(x, y, up, b, l2).loss - logistic_loss_gradient(x, y, down, b, l2).loss) / (2 * h);
      EXPECT_LE(oracle::relative_error(g.d_weights[k], num), 1e-4);
    }
    const double num_b = (logistic_loss_gradient(x, y, w, b + h, l2).loss - logistic_loss_gradient(x, y, w, b - h, l2).loss) / (2 * h);
    EXPECT_LE(oracle::relative_error(g.d_bias, num_b), 1e-4);
  }
}

TEST(Logistic, HugeLearningRateDiverges) {
  Rng rng(1);
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(60, 3, 1.0, 2, x, y);
  LogisticHyper h;
  h.learning_rate = 1e3;
  try {
    fit_logistic(x, y, h, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
  }
}

// ---------------------------------------------------------------------------
// linear SVM

TEST(LinearSvm, SeparableBlobs) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(100, 2, 3.0, 5, x, y);
  LinearSvm m;
  m.fit(x, y, 0);
  EXPECT_EQ(accuracy(y, predict(m, x)), 1.0);
  for (std::size_t r = 0; r < x.rows(); ++r) EXPECT_EQ(m.model().decision(x.row(r)) > 0, y[r] == 1);
}

TEST(LinearSvm, CalibrationNearHalfAtBoundary) {
  // Mirror-symmetric classes.
  std::vector<std::vector<double>> rows;
  LabelVector y;
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform(0.2, 3.0), b = rng.uniform(-1, 1);
    rows.push_back({a, b});
    y.push_back(1);
    rows.push_back({-a, -b});
    y.push_back(0);
  }
  const auto x = FeatureMatrix::from_rows(rows);
  LinearSvm m;
  m.fit(x, y, 0);
  const double p = m.model().platt(0.0);
  EXPECT_GE(p, 0.4);
  EXPECT_LE(p, 0.6);
}

TEST(LinearSvm, SubgradientAwayFromKink) {
  Rng rng(6);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testutil::random_matrix(25, 3, 2.0, rng);
    const auto y = testutil::random_labels(25, rng);
    std::vector<double> w(3);
    for (auto& v : w) v = rng.uniform(-1, 1);
    const double b = rng.uniform(-0.5, 0.5), c = 2.0;
    bool near_kink = false;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double margin = (y[r] ? 1.0 : -1.0) * (dot(w, x.row(r)) + b);
      near_kink = near_kink || std::abs(margin - 1.0) < 1e-3;
    }
    if (near_kink) continue;
    ++checked;
    const auto g = svm_objective_subgradient(x, y, w, b, c);
    const double h = 1e-5;
    for (std::size_t k = 0; k < w.size(); ++k) {
      auto up = w, down = w;
      up[k] += h;
      down[k] -= h;
      const double num = (svm_objective_subgradient(x, y, up, b, c).loss - svm_objective_subgradient(x, y, down, b, c).loss) / (2 * h);
      EXPECT_LE(oracle::relative_error(g.d_weights[k], num), 1e-4);
    }
    const double num_b = (svm_objective_subgradient(x, y, w, b + h, c).loss - svm_objective_subgradient(x, y, w, b - h, c).loss) / (2 * h);
    EXPECT_LE(oracle::relative_error(g.d_bias, num_b), 1e-4);
  }
  EXPECT_GT(checked, 10);
}

// ---------------------------------------------------------------------------
// decision tree

TEST(Tree, PureInputSingleLeaf) {
  const auto x = FeatureMatrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const auto m = fit_tree(x, LabelVector{1, 1, 1}, {}, 0);
  EXPECT_EQ(m.tree.nodes.size(), 1u);
  EXPECT_EQ(m.tree.nodes[0].value, 1.0);
  EXPECT_EQ(fit_tree(x, LabelVector{0, 0, 0}, {}, 0).tree.nodes[0].value, 0.0);
}

TEST(Tree, XorAtDepthTwo) {
  LabelVector y;
  const auto x = xor_data(y);
  TreeHyper h;
  h.max_depth = 2;
  const auto m = fit_tree(x, y, h, 0);
  EXPECT_EQ(accuracy(y, predict(m.predict_proba(x))), 1.0);
}

TEST(Tree, GiniOfPureChildren) {
  const std::vector<std::uint8_t> left{1, 1}, right{0, 0};
  EXPECT_EQ(weighted_gini(left, right), 0.0);
  EXPECT_DOUBLE_EQ(gini_impurity(std::vector<std::uint8_t>{0, 1}), 0.5);
}

TEST(Tree, MidpointThresholdAndNonEmptyChildren) {
  const auto x = FeatureMatrix::from_rows({{1}, {2}, {4}, {8}});
  const auto m = fit_tree(x, LabelVector{0, 0, 1, 1}, {}, 0);
  ASSERT_FALSE(m.tree.nodes[0].is_leaf());
  EXPECT_EQ(m.tree.nodes[0].threshold, 3.0);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto xr = testutil::random_matrix(60, 3, 1.0, rng);
    const auto yr = testutil::random_labels(60, rng);
    const auto t = fit_tree(xr, yr, {}, trial).tree;
    for (const auto& n : t.nodes) {
      EXPECT_GE(n.value, 0.0);
      EXPECT_LE(n.value, 1.0);
      if (!n.is_leaf()) {
        EXPECT_GT(t.nodes[static_cast<std::size_t>(n.left)].samples, 0u);
        EXPECT_GT(t.nodes[static_cast<std::size_t>(n.right)].samples, 0u);
      }
    }
  }
}

TEST(Tree, RespectsDepthAndLeafSize) {
  Rng rng(10);
  const auto x = testutil::random_matrix(200, 4, 1.0, rng);
  const auto y = testutil::random_labels(200, rng);
  TreeHyper h;
  h.max_depth = 3;
  h.min_samples_leaf = 7;
  const auto t = fit_tree(x, y, h, 0).tree;
  EXPECT_LE(t.depth(), 3u);
  for (const auto& n : t.nodes)
    if (n.is_leaf()) {
      EXPECT_GE(n.samples, 7u);
    }
}

// ---------------------------------------------------------------------------
// random forest

TEST(Forest, SingleTreeReducesToTree) {
  Rng rng(12);
  const auto x = testutil::random_matrix(80, 4, 1.0, rng);
  const auto y = testutil::random_labels(80, rng);
  ForestHyper fh;
  fh.n_trees = 1;
  fh.max_features = 4;
  fh.bootstrap = false;
  const auto forest = fit_forest(x, y, fh, 77);
  const auto tree = fit_tree(x, y, {}, 77);
  EXPECT_EQ(forest.trees[0].tree, tree.tree);
  EXPECT_EQ(forest.predict_proba(x), tree.predict_proba(x));
}

TEST(Forest, ThreadCountInvariant) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(200, 5, 0.5, 13, x, y);
  ForestHyper a, b;
  a.n_trees = b.n_trees = 30;
  b.n_threads = 4;
  const auto fa = fit_forest(x, y, a, 5), fb = fit_forest(x, y, b, 5);
  EXPECT_EQ(fa, fb);
  EXPECT_EQ(fa.predict_proba(x), fb.predict_proba(x));
}

TEST(Forest, SeparableBlobs) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(200, 3, 2.0, 14, x, y);
  ForestHyper h;
  h.n_trees = 50;
  RandomForest m(h);
  m.fit(x, y, 3);
  EXPECT_GE(accuracy(y, predict(m, x)), 0.99);
}

TEST(Forest, PerTreeSeedsDerived) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(40, 2, 1.0, 15, x, y);
  ForestHyper h;
  h.n_trees = 3;
  const auto f = fit_forest(x, y, h, 9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(f.tree_seeds[i], derive_seed(9, i));
}

// ---------------------------------------------------------------------------
// gradient boosting

TEST(Gbt, HandComputedStump) {
  // x = -2, -1, 1, 2 with y = 0, 0, 1, 1. F0 = 0 so p = 1/2 everywhere;
  // residuals are -1/2, -1/2, +1/2, +1/2 and hessians 1/4. Each leaf
  // holds two rows: sum r = -+1, sum h = 1/2.
  const auto x = FeatureMatrix::from_rows({{-2}, {-1}, {1}, {2}});
  const LabelVector y{0, 0, 1, 1};
  for (double lambda : {0.0, 1.0}) {
    GbtHyper h;
    h.n_rounds = 1;
    h.max_depth = 1;
    h.learning_rate = 1.0;
    h.lambda = lambda;
    const auto m = fit_gbt(x, y, h, 0);
    EXPECT_EQ(m.initial_log_odds, 0.0);
    const auto& t = m.trees.at(0);
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].threshold, 0.0);
    const double expect = 1.0 / (0.5 + lambda);
    EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, -expect, 1e-15);
    EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, expect, 1e-15);
  }
}

TEST(Gbt, ZeroLearningRateGivesPrior) {
  Rng rng(16);
  const auto x = testutil::random_matrix(50, 3, 1.0, rng);
  LabelVector y(50, 0);
  for (std::size_t i = 0; i < 15; ++i) y[i] = 1;
  GbtHyper h;
  h.learning_rate = 0.0;
  h.n_rounds = 5;
  for (double p : fit_gbt(x, y, h, 0).predict_proba(x)) EXPECT_NEAR(p, 0.3, 1e-12);
}

TEST(Gbt, LossNonIncreasingBothPresets) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = testutil::random_matrix(100, 4, 1.0, rng);
    const auto y = testutil::random_labels(100, rng);
    for (auto h : {GbtHyper::xgb_like(), GbtHyper::lgbm_like()}) {
      h.n_rounds = 30;
      const auto m = fit_gbt(x, y, h, 0);
      for (std::size_t i = 1; i < m.train_loss.size(); ++i)
        EXPECT_LE(m.train_loss[i], m.train_loss[i - 1] * (1 + 1e-12));
    }
  }
}

TEST(Gbt, PresetsGrowDifferently) {
  Rng rng(18);
  const auto x = testutil::random_matrix(400, 5, 1.0, rng);
  const auto y = testutil::random_labels(400, rng);
  auto xh = GbtHyper::xgb_like();
  auto lh = GbtHyper::lgbm_like();
  xh.n_rounds = lh.n_rounds = 3;
  const auto xm = fit_gbt(x, y, xh, 0), lm = fit_gbt(x, y, lh, 0);
  for (const auto& t : xm.trees) EXPECT_LE(t.depth(), 6u);
  for (const auto& t : lm.trees) EXPECT_LE(t.leaf_count(), 31u);
  for (const auto& t : lm.trees)
    for (const auto& n : t.nodes)
      if (n.is_leaf()) {
        EXPECT_GE(n.samples, 20u);
      }
}

// ---------------------------------------------------------------------------
// contract-wide properties

TEST(AllLearners, DeterministicBoundedAndReplayable) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(120, 7, 0.7, 19, x, y);
  Rng rng(20);
  const auto probe = testutil::random_matrix(50, 7, 50.0, rng);
  const nlohmann::json small_mlp{{"hidden", {16, 8}}, {"max_epochs", 5}};
  for (const auto& kind : model_kinds()) {
    SCOPED_TRACE(kind);
    const nlohmann::json params = kind == "mlp" ? small_mlp : nlohmann::json{};
    auto a = make_classifier(kind, params), b = make_classifier(kind, params);
    a->fit(x, y, 123);
    b->fit(x, y, 123);
    EXPECT_EQ(a->to_json(), b->to_json());
    const auto p = a->predict_proba(probe);
    for (double v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const auto doc = model_document(*a);
    const auto replay = load_classifier(nlohmann::json::parse(doc.dump()));
    EXPECT_EQ(replay->predict_proba(probe), p);
    EXPECT_EQ(replay->predict_proba(x), a->predict_proba(x));
  }
}

TEST(Registry, UnknownKindAndParam) {
  for (auto fn : {+[] { make_classifier("knn"); }, +[] { make_classifier("forest", {{"trees", 3}}); }}) {
    try {
      fn();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Config);
    }
  }
}

TEST(Registry, MlpCallbackBlocks) {
  const auto h = mlp_hyper_from_json(
      {{"callbacks", {{"early_stopping", {{"patience", 4}, {"min_delta", 0.01}}}, {"plateau", {{"factor", 0.25}}}}}});
  ASSERT_TRUE(h.callbacks.early_stopping && h.callbacks.plateau);
  EXPECT_EQ(h.callbacks.early_stopping->patience, 4u);
  EXPECT_EQ(h.callbacks.early_stopping->min_delta, 0.01);
  EXPECT_EQ(h.callbacks.plateau->factor, 0.25);
  EXPECT_EQ(h.callbacks.plateau->patience, PlateauConfig{}.patience);

  const auto off = mlp_hyper_from_json({{"callbacks", {{"early_stopping", false}}}});
  EXPECT_FALSE(off.callbacks.early_stopping);
  try {
    mlp_hyper_from_json({{"callbacks", {{"early_stopping", {{"patients", 3}}}}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Config);
  }
}
