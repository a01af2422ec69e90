#include <gtest/gtest.h>

#include "test_util.hpp"
#include "voteml/learners/tree.hpp"
#include "voteml/pipeline.hpp"
#include "voteml/synthetic.hpp"

using namespace voteml;

TEST(Synthetic, ImbalanceCounts) {
  SyntheticSpec spec;
  spec.n_rows = 100;
  spec.imbalance = 9;
  const auto d = generate_synthetic(spec, 1);
  EXPECT_EQ(d.positives, 10u);
  EXPECT_EQ(d.negatives, 90u);
  const auto rep = validate(d.table);
  EXPECT_EQ(rep.positives, 10u);
  EXPECT_EQ(rep.negatives, 90u);
}

TEST(Synthetic, NoiselessLabelsFollowTheRule) {
  SyntheticSpec spec;
  spec.n_rows = 500;
  spec.noise = 0.0;
  const auto d = generate_synthetic(spec, 2);
  EXPECT_EQ(d.bayes_accuracy, 1.0);
  const auto names = d.table.schema.feature_names();
  const auto& target = d.table.target_column();
  for (std::size_t r = 0; r < d.table.n_rows(); ++r) {
    std::vector<std::size_t> row;
    for (const auto& n : names) row.push_back(std::stoul(d.table.column(n)[r]->substr(1)));
    EXPECT_EQ(rule_holds(d.rule, row), *target[r] == "Yes");
  }
  // A consistent learner fits the training data exactly.
  const auto prep = prepare(d.table, {0.2, 3, false, 5});
  const auto tree = fit_tree(prep.x_train, prep.y_train, {}, 0);
  EXPECT_EQ(predict(tree.predict_proba(prep.x_train)), prep.y_train);
}

TEST(Synthetic, FixedSeedByteIdentical) {
  SyntheticSpec spec;
  const auto a = table_to_csv(generate_synthetic(spec, 42).table);
  EXPECT_EQ(a, table_to_csv(generate_synthetic(spec, 42).table));
  EXPECT_NE(a, table_to_csv(generate_synthetic(spec, 43).table));
}

TEST(Synthetic, BayesAccuracyClosedForm) {
  EXPECT_NEAR(bayes_accuracy(400, 2000, 0.05), 0.95, 1e-12);
  EXPECT_NEAR(bayes_accuracy(10, 100, 0.0), 1.0, 1e-12);
  // Empirical agreement of the rule with the labels on a large sample.
  SyntheticSpec spec;
  spec.n_rows = 20000;
  const auto d = generate_synthetic(spec, 5);
  const auto names = d.table.schema.feature_names();
  double agree = 0;
  for (std::size_t r = 0; r < d.table.n_rows(); ++r) {
    std::vector<std::size_t> row;
    for (const auto& n : names) row.push_back(std::stoul(d.table.column(n)[r]->substr(1)));
    agree += rule_holds(d.rule, row) == (*d.table.target_column()[r] == "Yes");
  }
  EXPECT_NEAR(agree / 20000.0, d.bayes_accuracy, 0.01);
}

TEST(Synthetic, SpecValidation) {
  for (auto mutate : {+[](SyntheticSpec& s) { s.noise = 0.5; }, +[](SyntheticSpec& s) { s.rule_size = 4; },
                      +[](SyntheticSpec& s) { s.categories.pop_back(); }, +[](SyntheticSpec& s) { s.imbalance = 0; }}) {
    SyntheticSpec s;
    mutate(s);
    try {
      generate_synthetic(s, 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Config);
    }
  }
}

TEST(Synthetic, SidecarAndSpecRoundTrip) {
  SyntheticSpec spec;
  spec.rule = {{1, 2}, {4, 0}};
  const auto d = generate_synthetic(spec, 7);
  EXPECT_EQ(d.rule, spec.rule);
  const auto side = sidecar_json(spec, d, 7);
  EXPECT_EQ(side["bayes_accuracy"], d.bayes_accuracy);
  EXPECT_EQ(side["rule"]["terms"].size(), 2u);
  const auto back = spec_from_json(spec_to_json(spec));
  EXPECT_EQ(spec_to_json(back), spec_to_json(spec));
}
