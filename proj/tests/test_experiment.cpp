#include <gtest/gtest.h>

#include "test_util.hpp"
#include "voteml/experiment.hpp"

using namespace voteml;
using nlohmann::json;
using testutil::slurp;

namespace {

json small_params() {
  return {{"mlp", {{"hidden", {16, 8}}, {"max_epochs", 8}, {"learning_rate", 0.01}}},
          {"forest", {{"n_trees", 15}}},
          {"gbt_xgb", {{"n_rounds", 20}}},
          {"gbt_lgbm", {{"n_rounds", 20}}},
          {"logreg", {{"epochs", 50}}},
          {"svm", {{"epochs", 50}}}};
}

ExperimentConfig small_config(const fs::path& out, std::uint64_t seed = 42) {
  return config_from_json({{"seed", seed},
                           {"synthetic", {{"n_rows", 300}}},
                           {"params", small_params()},
                           {"out", out.string()}});
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Run, WritesReportAndArtifacts) {
  const auto dir = testutil::scratch_dir("run_artifacts");
  const auto r = run_experiment(small_config(dir));
  for (const char* f : {"report.json", "ensemble.json", "preprocessor.json", "history.csv", "confusion.csv",
                        "models/0_mlp.json", "models/1_forest.json", "models/2_gbt_xgb.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto report = json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(report["spec_version"], "1.0");
  EXPECT_EQ(report["command"], "run");
  EXPECT_EQ(report["members"].size(), 3u);
  EXPECT_EQ(report_from_json(report["metrics"]), r.report);
  EXPECT_EQ(report["summary"]["accuracy"], r.report.accuracy);
  EXPECT_EQ(first_line(slurp(dir / "history.csv")), kHistoryHeader);
  EXPECT_EQ(first_line(slurp(dir / "confusion.csv")), "actual,predicted_0,predicted_1");
  EXPECT_EQ(parse_confusion_csv(slurp(dir / "confusion.csv")), r.report.confusion);
  EXPECT_EQ(r.report.confusion.total(), 60u);

  // Saved members reproduce the ensemble's probabilities.
  const auto manifest = json::parse(slurp(dir / "ensemble.json"));
  EXPECT_EQ(manifest["kind"], "soft-voting");
  const auto pre = preprocessor_from_json(json::parse(slurp(dir / "preprocessor.json")));
  const auto data = generate_synthetic(*small_config(dir).synthetic, 42);
  const auto x_test = pre.transform(data.table.select_rows(pre.split.test_rows));
  std::vector<std::shared_ptr<const Classifier>> members;
  std::vector<double> weights;
  for (const auto& m : manifest["members"]) {
    members.push_back(load_classifier(json::parse(slurp(dir / m["file"].get<std::string>()))));
    weights.push_back(m["weight"]);
  }
  const VotingEnsemble replay(members, weights);
  const auto labels = predict(replay.soft_vote(x_test));
  EXPECT_EQ(evaluate(select_labels(target_labels(data.table), pre.split.test_rows), labels), r.report);
}

TEST(Run, RepeatRunsAreByteIdentical) {
  const auto a = testutil::scratch_dir("run_repeat_a"), b = testutil::scratch_dir("run_repeat_b");
  run_experiment(small_config(a));
  run_experiment(small_config(b));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_GE(files, 8u);
}

TEST(Run, TestRowsDoNotLeakIntoFitting) {
  const auto dir = testutil::scratch_dir("run_leak");
  SyntheticSpec spec;
  spec.n_rows = 300;
  const auto data = generate_synthetic(spec, 9);
  write_csv(dir / "clean.csv", data.table);

  auto cfg = small_config(dir / "clean_out", 9);
  cfg.synthetic.reset();
  cfg.data = dir / "clean.csv";
  run_experiment(cfg);
  const auto pre = preprocessor_from_json(json::parse(slurp(dir / "clean_out" / "preprocessor.json")));

  // Rewrite every feature of every test row to a different known category.
  Table mutated = data.table;
  for (auto r : pre.split.test_rows)
    for (const auto& name : mutated.schema.feature_names()) {
      auto& cell = mutated.columns[*mutated.schema.find(name)][r];
      cell = *cell == category_name(0) ? category_name(1) : category_name(0);
    }
  write_csv(dir / "mutated.csv", mutated);
  cfg.data = dir / "mutated.csv";
  cfg.out = dir / "mutated_out";
  run_experiment(cfg);

  for (const char* f : {"preprocessor.json", "ensemble.json", "history.csv", "models/0_mlp.json",
                        "models/1_forest.json", "models/2_gbt_xgb.json"})
    EXPECT_EQ(slurp(dir / "clean_out" / f), slurp(dir / "mutated_out" / f)) << f;
}

TEST(Run, ConfigErrors) {
  const auto dir = testutil::scratch_dir("run_errors");
  auto expect_config = [](const std::function<void()>& f) {
    try {
      f();
      FAIL() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::Config) << e.what();
    }
  };
  expect_config([] { config_from_json({{"sed", 1}}); });
  expect_config([] { config_from_json({{"params", {{"mlp", {{"hiden", {8}}}}}}}); });
  expect_config([&] {
    auto c = small_config(dir);
    c.ensemble = "ensemble4";
    run_experiment(c);
  });
  expect_config([&] { run_experiment(config_from_json({{"synthetic", json::object()}, {"out", dir.string()}})); });
  expect_config([&] {
    auto c = small_config(dir);
    c.weights = {1, 2};
    run_experiment(c);
  });
  expect_config([&] { load_config(dir / "missing.json"); });
}

TEST(Run, MissingDataFileIsDataError) {
  const auto dir = testutil::scratch_dir("run_nodata");
  auto c = small_config(dir);
  c.synthetic.reset();
  c.data = dir / "absent.csv";
  try {
    run_experiment(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e), kExitData);
  }
}

TEST(Config, FileRelativePathsAndOverrides) {
  const auto dir = testutil::scratch_dir("config_file");
  write_file_atomic(dir / "exp.json", json{{"seed", 3}, {"data", "d.csv"}, {"out", "results"}, {"ensemble", "ensemble6"},
                                           {"members", {"mlp", "forest"}}}
                                           .dump());
  auto c = load_config(dir / "exp.json");
  EXPECT_EQ(*c.data, dir / "d.csv");
  EXPECT_EQ(*c.out, dir / "results");
  EXPECT_EQ(ensemble_members(c).size(), 2u);
  apply_overrides(c, {std::nullopt, std::nullopt, 5, std::string("ensemble6"), std::string("macro"), std::nullopt});
  EXPECT_EQ(*c.seed, 5u);
  EXPECT_EQ(ensemble_members(c).size(), 6u);
  EXPECT_EQ(c.averaging, Averaging::Macro);
}

TEST(Compare, DefaultListHasSevenRows) {
  const auto dir = testutil::scratch_dir("compare_default");
  const auto r = compare_models(small_config(dir));
  ASSERT_EQ(r.rows.size(), 7u);
  const auto lines = csv::parse(slurp(dir / "comparison.csv"));
  ASSERT_EQ(lines.size(), 8u);
  EXPECT_EQ(first_line(slurp(dir / "comparison.csv")), kComparisonHeader);
  EXPECT_EQ(lines[7].fields[0], "Ensemble Model");
  for (const auto& row : r.rows) EXPECT_EQ(row.status, "ok") << row.name;
  EXPECT_TRUE(fs::exists(dir / "comparison.txt"));
  EXPECT_EQ(first_line(slurp(dir / "accuracy_bars.csv")), "model,accuracy");
  EXPECT_EQ(json::parse(slurp(dir / "report.json"))["models"].size(), 7u);
}

TEST(Compare, IdenticalModelsGiveIdenticalRows) {
  const auto dir = testutil::scratch_dir("compare_same");
  auto c = small_config(dir);
  c.models = {{"A", "forest", {}}, {"B", "forest", {}}};
  c.models = resolve_members(c, c.models);
  const auto r = compare_models(c);
  EXPECT_EQ(r.rows[0].report, r.rows[1].report);
}

TEST(Compare, DivergentModelFailsAlone) {
  const auto dir = testutil::scratch_dir("compare_fail");
  auto c = small_config(dir);
  c.models = {{"bad", "logreg", {{"learning_rate", 1e3}, {"epochs", 200}}}, {"forest", "forest", {{"n_trees", 10}}}};
  const auto r = compare_models(c);
  EXPECT_FALSE(r.rows[0].report.has_value());
  EXPECT_EQ(r.rows[0].status.rfind("failed", 0), 0u);
  EXPECT_TRUE(r.rows[1].report.has_value());
  const auto lines = csv::parse(slurp(dir / "comparison.csv"));
  EXPECT_EQ(lines[1].fields, (std::vector<std::string>{"bad", "", "", "", ""}));

  auto all_bad = small_config(testutil::scratch_dir("compare_all_fail"));
  all_bad.models = {{"a", "logreg", {{"learning_rate", 1e3}, {"epochs", 200}}},
                    {"b", "logreg", {{"learning_rate", 1e4}, {"epochs", 200}}}};
  try {
    compare_models(all_bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code(e), kExitDivergence);
  }
}

TEST(Tune, SinglePointSpace) {
  const auto dir = testutil::scratch_dir("tune_one");
  auto c = small_config(dir);
  c.tune.n_trials = 3;
  c.tune.space = {{8}, {0.1}, {0.01}, 2};
  const auto r = tune_mlp(c);
  EXPECT_EQ(r.trials.size(), 1u);
  EXPECT_EQ(r.best.units, (std::vector<std::size_t>{8, 8}));
  const auto best = json::parse(slurp(dir / "best_config.json"));
  EXPECT_EQ(best["params"]["mlp"]["hidden"], json({8, 8}));
  EXPECT_EQ(best["params"]["mlp"]["max_epochs"], 8);
  EXPECT_EQ(first_line(slurp(dir / "trials.csv")), "trial,units1,units2,dropout,lr,val_score,status");
  // The chosen block is accepted back as model params.
  EXPECT_NO_THROW(make_classifier("mlp", best["params"]["mlp"]));
}

TEST(Tune, SmallSpaceVisitsEveryPointDeterministically) {
  const auto first = testutil::scratch_dir("tune_six_a");
  auto c = small_config(first);
  c.tune.n_trials = 10;
  c.tune.space = {{4, 8, 16}, {0.0}, {0.01, 0.05}, 1};
  const auto a = tune_mlp(c);
  EXPECT_EQ(a.trials.size(), 6u);
  c.out = testutil::scratch_dir("tune_six_b");
  const auto b = tune_mlp(c);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(slurp(*c.out / "trials.csv"), slurp(first / "trials.csv"));
}

TEST(Generate, CsvPathAndDirectory) {
  const auto dir = testutil::scratch_dir("generate");
  auto c = config_from_json({{"seed", 4}, {"synthetic", {{"n_rows", 50}}}, {"out", (dir / "d.csv").string()}});
  const auto files = generate_files(c);
  EXPECT_EQ(files.csv, dir / "d.csv");
  EXPECT_EQ(files.sidecar, dir / "d.json");
  const auto table = load_csv(files.csv, disaster_survey_schema());
  EXPECT_EQ(table.n_rows(), 50u);
  EXPECT_EQ(table_to_csv(table), slurp(files.csv));

  c.out = dir / "sub";
  fs::create_directories(dir / "sub");
  EXPECT_EQ(generate_files(c).csv, dir / "sub" / "synthetic.csv");
  EXPECT_EQ(slurp(dir / "sub" / "synthetic.csv"), slurp(dir / "d.csv"));
}
