#include <gtest/gtest.h>

#include "test_util.hpp"
#include "voteml/ensemble.hpp"

using namespace voteml;

namespace {

/// Returns the stored probability column regardless of the input values.
class FixedClassifier final : public Classifier {
 public:
  explicit FixedClassifier(std::vector<double> p, std::size_t d = 1) : p_(std::move(p)), d_(d) {}
  std::string kind() const override { return "fixed"; }
  void fit(const FeatureMatrix&, const LabelVector&, std::uint64_t) override {}
  bool fitted() const override { return true; }
  std::size_t n_features() const override { return d_; }
  nlohmann::json to_json() const override { return {{"kind", "fixed"}, {"p", p_}}; }

 protected:
  std::vector<double> compute_proba(const FeatureMatrix& x) const override {
    return {p_.begin(), p_.begin() + static_cast<std::ptrdiff_t>(x.rows())};
  }

 private:
  std::vector<double> p_;
  std::size_t d_;
};

std::shared_ptr<const Classifier> fixed(std::vector<double> p) { return std::make_shared<FixedClassifier>(std::move(p)); }

}  // namespace

TEST(SoftVote, ArithmeticMean) {
  VotingEnsemble e({fixed({0.2}), fixed({0.4}), fixed({0.9})});
  EXPECT_DOUBLE_EQ(e.soft_vote(FeatureMatrix(1, 1))[0], 0.5);
}

TEST(SoftVote, IdenticalMembersIdempotent) {
  Rng rng(1);
  std::vector<double> p(200);
  for (auto& v : p) v = rng.uniform();
  for (std::size_t n = 2; n <= 7; ++n) {
    std::vector<std::shared_ptr<const Classifier>> members(n, fixed(p));
    EXPECT_EQ(VotingEnsemble(members).soft_vote(FeatureMatrix(200, 1)), p);
  }
}

TEST(SoftVote, DegenerateWeights) {
  const std::vector<double> p0{0.13, 0.77, 0.5};
  VotingEnsemble e({fixed(p0), fixed({0.9, 0.1, 0.3}), fixed({0.0, 1.0, 0.2})}, {1, 0, 0});
  EXPECT_EQ(e.soft_vote(FeatureMatrix(3, 1)), p0);
}

TEST(SoftVote, BoundsAndPermutationInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + rng.below(5), n = 50;
    std::vector<std::vector<double>> probs(m, std::vector<double>(n));
    std::vector<double> w(m);
    for (auto& col : probs)
      for (auto& v : col) v = rng.uniform();
    for (auto& v : w) v = rng.uniform(0.01, 3.0);
    std::vector<std::shared_ptr<const Classifier>> members;
    for (const auto& col : probs) members.push_back(fixed(col));
    const auto base = VotingEnsemble(members, w).soft_vote(FeatureMatrix(n, 1));
    for (std::size_t r = 0; r < n; ++r) {
      double lo = 1, hi = 0;
      for (const auto& col : probs) {
        lo = std::min(lo, col[r]);
        hi = std::max(hi, col[r]);
      }
      EXPECT_GE(base[r], lo);
      EXPECT_LE(base[r], hi);
    }
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    std::vector<std::shared_ptr<const Classifier>> pm;
    std::vector<double> pw;
    for (auto i : perm) {
      pm.push_back(members[i]);
      pw.push_back(w[i]);
    }
    EXPECT_EQ(VotingEnsemble(pm, pw).soft_vote(FeatureMatrix(n, 1)), base);
  }
}

TEST(SoftVote, WeightsNormalised) {
  VotingEnsemble e({fixed({0.0}), fixed({1.0})}, {1, 3});
  EXPECT_DOUBLE_EQ(e.weights()[0], 0.25);
  EXPECT_DOUBLE_EQ(e.soft_vote(FeatureMatrix(1, 1))[0], 0.75);
}

TEST(SoftVote, Errors) {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code([] { VotingEnsemble({fixed({0.5})}); }), ErrorCode::EmptyEnsemble);
  EXPECT_EQ(code([] { VotingEnsemble(std::vector<std::shared_ptr<const Classifier>>{}); }), ErrorCode::EmptyEnsemble);
  EXPECT_EQ(code([] { VotingEnsemble({fixed({0.5}), fixed({0.5})}).soft_vote(FeatureMatrix(1, 2)); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code([] { VotingEnsemble({fixed({0.5}), fixed({0.5})}, {1, -1}); }), ErrorCode::InvalidArgument);
}

TEST(FitEnsemble, Presets) {
  const auto e3 = ensemble_preset("ensemble3");
  ASSERT_EQ(e3.size(), 3u);
  EXPECT_EQ(e3[0].kind, "mlp");
  EXPECT_EQ(e3[1].kind, "forest");
  EXPECT_EQ(e3[2].kind, "gbt_xgb");
  const auto e6 = ensemble_preset("ensemble6");
  std::vector<std::string> kinds;
  for (const auto& m : e6) kinds.push_back(m.kind);
  EXPECT_EQ(kinds, (std::vector<std::string>{"logreg", "svm", "forest", "gbt_xgb", "gbt_lgbm", "mlp"}));
}

TEST(FitEnsemble, MembersInOrderWithDerivedSeeds) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(120, 7, 1.0, 3, x, y);
  auto cfg = ensemble_preset("ensemble3");
  cfg[0].params = {{"hidden", {8}}, {"max_epochs", 3}};
  cfg[1].params = {{"n_trees", 10}};
  cfg[2].params = {{"n_rounds", 10}};
  const auto e = fit_ensemble(x, y, cfg, 17);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_EQ(e.member(0).kind(), "mlp");
  EXPECT_EQ(e.member(1).kind(), "forest");
  EXPECT_EQ(e.member(2).kind(), "gbt");
  for (double w : e.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  auto forest = make_classifier("forest", cfg[1].params);
  forest->fit(x, y, derive_seed(17, 1));
  EXPECT_EQ(forest->to_json(), e.member(1).to_json());
}

TEST(FitEnsemble, SingleMemberRejected) {
  FeatureMatrix x;
  LabelVector y;
  testutil::blobs(20, 2, 1.0, 4, x, y);
  try {
    fit_ensemble(x, y, {{"lr", "logreg", {}}}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyEnsemble);
  }
}

TEST(FitEnsemble, Manifest) {
  VotingEnsemble e({fixed({0.1}), fixed({0.2})}, {}, {"a", "b"});
  const auto j = e.manifest({"models/0_a.json", "models/1_b.json"}, "custom");
  EXPECT_EQ(j["members"][1]["file"], "models/1_b.json");
  EXPECT_EQ(j["members"][0]["weight"], 0.5);
  EXPECT_EQ(j["kind"], "soft-voting");
}
