#pragma once

// Batch experiments driven by a JSON config file plus command-line
// overrides. Every output is a pure function of (dataset bytes, config,
// seed) and is written atomically.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/ensemble.hpp"
#include "voteml/io.hpp"
#include "voteml/learners/registry.hpp"
#include "voteml/metrics.hpp"
#include "voteml/pipeline.hpp"
#include "voteml/synthetic.hpp"
#include "voteml/table.hpp"
#include "voteml/training_control.hpp"

namespace voteml {

inline constexpr std::string_view kReportSpecVersion = "1.0";

namespace fs = std::filesystem;

struct TuneConfig {
  std::size_t n_trials = 10;
  SearchSpace space;
};

struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> data;
  std::optional<fs::path> schema;
  std::optional<SyntheticSpec> synthetic;
  double test_fraction = 0.2;
  bool smote = true;
  std::size_t smote_k = 5;
  std::string ensemble = "ensemble3";
  std::vector<MemberConfig> members;         // custom ensemble; overrides the preset when non-empty
  std::vector<MemberConfig> models;          // compare list
  std::map<std::string, nlohmann::json> params;  // per-kind hyperparameter overrides
  std::vector<double> weights;
  Averaging averaging = Averaging::Weighted;
  double threshold = kDefaultThreshold;
  std::optional<fs::path> out;
  TuneConfig tune;
};

struct CliOverrides {
  std::optional<fs::path> data;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ensemble;
  std::optional<std::string> averaging;
  std::optional<std::vector<double>> weights;
};

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::vector<MemberConfig> member_list(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) fail(ErrorCode::Config, std::string(key) + " must be a list");
  std::vector<MemberConfig> out;
  for (const auto& m : j) {
    if (m.is_string()) {
      out.push_back({m.get<std::string>(), m.get<std::string>(), {}});
      continue;
    }
    if (!m.is_object() || !m.contains("kind")) fail(ErrorCode::Config, std::string(key) + " entries need a kind");
    for (const auto& [k, v] : m.items())
      if (k != "kind" && k != "name" && k != "params")
        fail(ErrorCode::Config, "unknown field '" + k + "' in " + key + " entry");
    MemberConfig c;
    c.kind = m.at("kind").get<std::string>();
    c.name = m.value("name", c.kind);
    if (m.contains("params")) c.params = m.at("params");
    out.push_back(std::move(c));
  }
  return out;
}

inline fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

}  // namespace detail

/// Reads the config document. Relative paths are taken relative to `base_dir`.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const fs::path& base_dir = {}) {
  if (!j.is_object()) fail(ErrorCode::Config, "config must be a JSON object");
  static const std::set<std::string> known{"seed",    "data",    "schema",   "synthetic", "test_fraction",
                                           "smote",   "ensemble", "members", "models",    "params",
                                           "weights", "averaging", "threshold", "out",     "tune"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) fail(ErrorCode::Config, "unknown config key '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("data")) c.data = detail::resolve(base_dir, j.at("data").get<std::string>());
    if (j.contains("schema")) c.schema = detail::resolve(base_dir, j.at("schema").get<std::string>());
    if (j.contains("synthetic")) c.synthetic = spec_from_json(j.at("synthetic"));
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    if (j.contains("smote")) {
      const auto& s = j.at("smote");
      if (s.is_boolean()) {
        c.smote = s.get<bool>();
      } else {
        for (const auto& [k, v] : s.items())
          if (k != "enabled" && k != "k") fail(ErrorCode::Config, "unknown smote field '" + k + "'");
        c.smote = s.value("enabled", true);
        c.smote_k = s.value("k", c.smote_k);
      }
    }
    c.ensemble = j.value("ensemble", c.ensemble);
    if (j.contains("members")) c.members = detail::member_list(j.at("members"), "members");
    if (j.contains("models")) c.models = detail::member_list(j.at("models"), "models");
    if (j.contains("params")) {
      if (!j.at("params").is_object()) fail(ErrorCode::Config, "params must map model kinds to objects");
      for (const auto& [kind, p] : j.at("params").items()) c.params[kind] = p;
    }
    if (j.contains("weights")) c.weights = j.at("weights").get<std::vector<double>>();
    if (j.contains("averaging")) c.averaging = parse_averaging(j.at("averaging").get<std::string>());
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("out")) c.out = detail::resolve(base_dir, j.at("out").get<std::string>());
    if (j.contains("tune")) {
      const auto& t = j.at("tune");
      for (const auto& [k, v] : t.items())
        if (k != "n_trials" && k != "widths" && k != "dropouts" && k != "learning_rates" && k != "n_layers")
          fail(ErrorCode::Config, "unknown tune field '" + k + "'");
      c.tune.n_trials = t.value("n_trials", c.tune.n_trials);
      c.tune.space.widths = t.value("widths", c.tune.space.widths);
      c.tune.space.dropouts = t.value("dropouts", c.tune.space.dropouts);
      c.tune.space.learning_rates = t.value("learning_rates", c.tune.space.learning_rates);
      c.tune.space.n_layers = t.value("n_layers", c.tune.space.n_layers);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, e.what());
  }
  for (const auto& [kind, p] : c.params) {
    const auto& kinds = model_kinds();
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
      fail(ErrorCode::Config, "params given for unknown model kind '" + kind + "'");
    make_classifier(kind, p);  // validates the block
  }
  return c;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const Error&) {
    fail(ErrorCode::Config, "cannot read config " + path.string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

inline void apply_overrides(ExperimentConfig& c, const CliOverrides& o) {
  if (o.data) {
    c.data = *o.data;
    c.synthetic.reset();
  }
  if (o.out) c.out = *o.out;
  if (o.seed) c.seed = *o.seed;
  if (o.ensemble) {
    c.ensemble = *o.ensemble;
    c.members.clear();
  }
  if (o.averaging) c.averaging = parse_averaging(*o.averaging);
  if (o.weights) c.weights = *o.weights;
}

/// Member list of the configured ensemble with per-kind overrides applied.
inline std::vector<MemberConfig> resolve_members(const ExperimentConfig& c, std::vector<MemberConfig> members) {
  for (auto& m : members) {
    if (!m.params.is_null()) continue;
    if (auto it = c.params.find(m.kind); it != c.params.end()) m.params = it->second;
  }
  return members;
}

inline std::vector<MemberConfig> ensemble_members(const ExperimentConfig& c) {
  return resolve_members(c, c.members.empty() ? ensemble_preset(c.ensemble) : c.members);
}

inline void check_config(const ExperimentConfig& c) {
  if (!c.seed) fail(ErrorCode::Config, "a seed is required (config 'seed' or --seed)");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) fail(ErrorCode::Config, "test_fraction must lie in (0, 1)");
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) fail(ErrorCode::Config, "threshold must lie in [0, 1]");
  if (!c.out) fail(ErrorCode::Config, "an output directory is required (config 'out' or --out)");
  if (!c.data && !c.synthetic) fail(ErrorCode::Config, "no dataset: give --data, 'data' or 'synthetic'");
  if (c.smote && c.smote_k < 1) fail(ErrorCode::Config, "smote.k must be at least 1");
}

// ---------------------------------------------------------------------------
// Shared steps

struct LoadedData {
  Table table;
  std::size_t dropped_missing_target = 0;
  nlohmann::json source;
};

inline LoadedData load_dataset(const ExperimentConfig& c) {
  LoadedData out;
  if (c.data) {
    const Schema schema = c.schema ? load_schema(*c.schema) : disaster_survey_schema();
    out.table = load_csv(*c.data, schema);
    out.source = {{"type", "csv"}, {"file", c.data->filename().string()}};
  } else {
    const auto data = generate_synthetic(*c.synthetic, *c.seed);
    out.table = data.table;
    out.source = {{"type", "synthetic"}, {"spec", spec_to_json(*c.synthetic)}, {"bayes_accuracy", data.bayes_accuracy}};
  }
  out.dropped_missing_target = drop_missing_target(out.table);
  validate(out.table);
  return out;
}

inline PipelineOptions pipeline_options(const ExperimentConfig& c) { return {c.test_fraction, *c.seed, c.smote, c.smote_k}; }

/// Seed handed to model fitting; the split and SMOTE use other streams.
inline std::uint64_t model_seed(const ExperimentConfig& c) { return derive_seed(*c.seed, 3); }

inline void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline const MlpClassifier* find_mlp(const VotingEnsemble& e) {
  for (std::size_t i = 0; i < e.size(); ++i)
    if (const auto* m = dynamic_cast<const MlpClassifier*>(&e.member(i))) return m;
  return nullptr;
}

inline nlohmann::json data_summary(const LoadedData& loaded, const PreparedData& prep) {
  return {{"source", loaded.source},
          {"n_rows", loaded.table.n_rows()},
          {"dropped_missing_target", loaded.dropped_missing_target},
          {"n_train", prep.n_train_original},
          {"n_train_after_smote", prep.y_train.size()},
          {"n_synthetic", prep.preprocessor.n_synthetic},
          {"n_test", prep.y_test.size()},
          {"warnings", prep.warnings}};
}

// ---------------------------------------------------------------------------
// run

struct RunResult {
  EvaluationReport report;
  std::vector<NamedReport> members;
  nlohmann::json report_json;
};

inline RunResult run_experiment(ExperimentConfig c) {
  check_config(c);
  const auto members = ensemble_members(c);
  if (!c.weights.empty() && c.weights.size() != members.size())
    fail(ErrorCode::Config, std::to_string(c.weights.size()) + " weights given for " + std::to_string(members.size()) +
                                " ensemble members");
  for (const auto& m : members) make_classifier(m.kind, m.params);
  const fs::path out = *c.out;

  const auto loaded = load_dataset(c);
  const auto prep = prepare(loaded.table, pipeline_options(c));
  const auto ensemble = fit_ensemble(prep.x_train, prep.y_train, members, model_seed(c), c.weights);

  const auto member_probs = ensemble.member_probabilities(prep.x_test);
  const auto probs = ensemble.combine(member_probs);
  RunResult result;
  result.report = evaluate(prep.y_test, predict(probs, c.threshold));

  nlohmann::json member_json = nlohmann::json::array();
  std::vector<std::string> files;
  for (std::size_t i = 0; i < ensemble.size(); ++i) {
    const auto rep = evaluate(prep.y_test, predict(member_probs[i], c.threshold));
    result.members.push_back({ensemble.names()[i], rep, "ok"});
    const auto file = "models/" + std::to_string(i) + "_" + ensemble.names()[i] + ".json";
    files.push_back(file);
    write_json(out / file, model_document(ensemble.member(i)));
    member_json.push_back({{"name", ensemble.names()[i]},
                           {"kind", members[i].kind},
                           {"weight", ensemble.weights()[i]},
                           {"file", file},
                           {"metrics", to_json(rep)}});
  }
  write_json(out / "ensemble.json", ensemble.manifest(files, c.members.empty() ? c.ensemble : "custom"));
  write_json(out / "preprocessor.json", to_json(prep.preprocessor));

  const auto* mlp = find_mlp(ensemble);
  if (mlp) write_file_atomic(out / "history.csv", history_csv(mlp->history()));
  write_file_atomic(out / "confusion.csv", confusion_csv(result.report.confusion));

  const auto& avg = result.report.average(c.averaging);
  result.report_json = {
      {"spec_version", kReportSpecVersion},
      {"command", "run"},
      {"seed", *c.seed},
      {"ensemble", c.members.empty() ? c.ensemble : "custom"},
      {"averaging", to_string(c.averaging)},
      {"threshold", c.threshold},
      {"test_fraction", c.test_fraction},
      {"smote", {{"enabled", c.smote}, {"k", c.smote_k}, {"k_used", prep.preprocessor.smote_k_used}}},
      {"data", data_summary(loaded, prep)},
      {"summary",
       {{"accuracy", result.report.accuracy}, {"precision", avg.precision}, {"recall", avg.recall}, {"f1", avg.f1}}},
      {"metrics", to_json(result.report)},
      {"members", member_json},
      {"training_curves", mlp ? "history.csv holds the MLP member's per-epoch history; tree members have no epochs"
                              : "no member trains by epochs"}};
  if (mlp) result.report_json["mlp_best_epoch"] = mlp->history().best_epoch;
  write_json(out / "report.json", result.report_json);
  return result;
}

// ---------------------------------------------------------------------------
// compare

inline const std::vector<MemberConfig>& default_comparison_models() {
  static const std::vector<MemberConfig> models{
      {"Logistic Regression", "logreg", {}}, {"SVM", "svm", {}},       {"Random Forest", "forest", {}},
      {"XGBoost", "gbt_xgb", {}},            {"LightGBM", "gbt_lgbm", {}}, {"ANN", "mlp", {}},
      {"Ensemble Model", "ensemble3", {}}};
  return models;
}

struct CompareResult {
  std::vector<NamedReport> rows;
  ComparisonTable table;
};

/// Every listed model sees the same preprocessed split and the same seed.
/// A model whose fit fails keeps its row, marked failed.
inline CompareResult compare_models(ExperimentConfig c) {
  check_config(c);
  const auto models = resolve_members(c, c.models.empty() ? default_comparison_models() : c.models);
  if (models.size() < 2) fail(ErrorCode::Config, "compare needs at least 2 models");
  for (const auto& m : models)
    if (m.kind != "ensemble3" && m.kind != "ensemble6") make_classifier(m.kind, m.params);
  const fs::path out = *c.out;

  const auto loaded = load_dataset(c);
  const auto prep = prepare(loaded.table, pipeline_options(c));

  CompareResult result;
  std::string status_csv = "model,status\n";
  for (const auto& m : models) {
    NamedReport row{m.name, std::nullopt, "ok"};
    try {
      std::vector<double> probs;
      if (m.kind == "ensemble3" || m.kind == "ensemble6") {
        auto e = fit_ensemble(prep.x_train, prep.y_train, resolve_members(c, ensemble_preset(m.kind)), model_seed(c),
                              m.kind == c.ensemble ? c.weights : std::vector<double>{});
        probs = e.soft_vote(prep.x_test);
      } else {
        auto model = make_classifier(m.kind, m.params);
        model->fit(prep.x_train, prep.y_train, model_seed(c));
        probs = model->predict_proba(prep.x_test);
      }
      row.report = evaluate(prep.y_test, predict(probs, c.threshold));
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::Config) throw;
      row.status = std::string("failed: ") + e.what();
    }
    status_csv += csv::join({display_name(m.name), row.status}) + "\n";
    result.rows.push_back(std::move(row));
  }
  result.table = compare_table(result.rows, c.averaging);
  write_file_atomic(out / "comparison.csv", result.table.csv);
  write_file_atomic(out / "comparison.txt", result.table.text);
  write_file_atomic(out / "accuracy_bars.csv", result.table.accuracy_bars);
  write_file_atomic(out / "comparison_status.csv", status_csv);

  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    nlohmann::json row{{"model", display_name(r.name)}, {"status", r.status}};
    if (r.report) row["metrics"] = to_json(*r.report);
    rows.push_back(row);
  }
  write_json(out / "report.json", {{"spec_version", kReportSpecVersion},
                                   {"command", "compare"},
                                   {"seed", *c.seed},
                                   {"averaging", to_string(c.averaging)},
                                   {"data", data_summary(loaded, prep)},
                                   {"models", rows}});
  bool any_ok = false;
  for (const auto& r : result.rows) any_ok = any_ok || r.report.has_value();
  if (!any_ok) fail(ErrorCode::NonFiniteLoss, "every model in the comparison failed");
  return result;
}

// ---------------------------------------------------------------------------
// tune

/// Random search over MLP widths, dropout and learning rate, scored by the
/// validation accuracy of the restored (best-loss) epoch.
inline SearchResult tune_mlp(ExperimentConfig c) {
  check_config(c);
  const nlohmann::json base = c.params.contains("mlp") ? c.params.at("mlp") : nlohmann::json::object();
  mlp_hyper_from_json(base);
  const auto& space = c.tune.space;
  if (space.n_layers < 1) fail(ErrorCode::Config, "tune.n_layers must be at least 1");
  if (c.tune.n_trials < 1) fail(ErrorCode::Config, "tune.n_trials must be at least 1");
  if (space.widths.empty() || space.dropouts.empty() || space.learning_rates.empty())
    fail(ErrorCode::Config, "tune search lists must be non-empty");
  for (auto w : space.widths)
    if (w == 0) fail(ErrorCode::Config, "tune widths must be positive");
  for (double d : space.dropouts)
    if (!(d >= 0.0 && d < 1.0)) fail(ErrorCode::Config, "tune dropouts must lie in [0, 1)");
  for (double lr : space.learning_rates)
    if (!(lr > 0.0)) fail(ErrorCode::Config, "tune learning rates must be positive");
  const fs::path out = *c.out;

  const auto loaded = load_dataset(c);
  const auto prep = prepare(loaded.table, pipeline_options(c));

  auto evaluate_trial = [&](const TrialConfig& t) {
    auto hyper = mlp_hyper_from_json(base);
    hyper.hidden = t.units;
    hyper.dropout = t.dropout;
    hyper.learning_rate = t.learning_rate;
    const auto fit = fit_mlp(prep.x_train, prep.y_train, hyper, model_seed(c));
    for (const auto& r : fit.history.records)
      if (r.epoch == fit.history.best_epoch) return r.val_acc;
    return fit.history.records.back().val_acc;
  };
  const auto result = random_search(space, c.tune.n_trials, derive_seed(*c.seed, 4), evaluate_trial);

  write_file_atomic(out / "trials.csv", trials_csv(result, space.n_layers));
  nlohmann::json params = base;
  params["hidden"] = result.best.units;
  params["dropout"] = result.best.dropout;
  params["learning_rate"] = result.best.learning_rate;
  write_json(out / "best_config.json", {{"spec_version", kReportSpecVersion},
                                        {"seed", *c.seed},
                                        {"trial", result.best_trial},
                                        {"val_score", result.best_score},
                                        {"params", {{"mlp", params}}}});
  return result;
}

// ---------------------------------------------------------------------------
// generate

struct GeneratedFiles {
  fs::path csv;
  fs::path sidecar;
};

/// `out` ending in .csv names the data file; otherwise it is a directory
/// receiving synthetic.csv. The sidecar sits next to the CSV with a .json
/// extension.
inline GeneratedFiles generate_files(const ExperimentConfig& c) {
  if (!c.seed) fail(ErrorCode::Config, "a seed is required (config 'seed' or --seed)");
  if (!c.out) fail(ErrorCode::Config, "an output path is required (config 'out' or --out)");
  const SyntheticSpec spec = c.synthetic.value_or(SyntheticSpec{});
  GeneratedFiles files;
  files.csv = c.out->extension() == ".csv" ? *c.out : *c.out / "synthetic.csv";
  files.sidecar = fs::path(files.csv).replace_extension(".json");
  const auto data = generate_synthetic(spec, *c.seed);
  write_csv(files.csv, data.table);
  write_json(files.sidecar, sidecar_json(spec, data, *c.seed));
  return files;
}

// ---------------------------------------------------------------------------
// exit codes

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

inline int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config:
      return kExitConfig;
    case ErrorCategory::Data:
      return kExitData;
    case ErrorCategory::Training:
      return kExitDivergence;
    case ErrorCategory::Usage:
      return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace voteml
