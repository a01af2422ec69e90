#pragma once

// The fixed preprocessing order: impute -> encode -> split -> SMOTE on the
// training rows -> fit the scaler on the training rows -> scale both splits.
// The split is drawn from the labels alone, and every fitted state (modes,
// encoders, scaler) sees training rows only.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/matrix.hpp"
#include "voteml/preprocess.hpp"
#include "voteml/random.hpp"
#include "voteml/smote.hpp"
#include "voteml/table.hpp"

namespace voteml {

inline constexpr int kPreprocessorFormatVersion = 1;

struct PipelineOptions {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  bool smote = true;
  std::size_t smote_k = 5;
};

struct FittedPreprocessor {
  std::vector<std::string> feature_columns;
  std::string target_column;
  std::string positive_label;
  std::string negative_label;
  ImputerState imputer;
  std::map<std::string, LabelEncoder> encoders;
  ScalerParams scaler;
  SplitIndices split;
  double test_fraction = 0.2;
  bool smote_enabled = true;
  std::size_t smote_k = 5;
  std::size_t smote_k_used = 0;
  std::uint64_t smote_seed = 0;
  std::size_t n_synthetic = 0;

  /// Imputes and label-encodes the feature columns of `table` (unscaled).
  FeatureMatrix encode_features(const Table& table) const {
    const Table imputed = apply_imputer(imputer, table);
    FeatureMatrix out(imputed.n_rows(), feature_columns.size());
    for (std::size_t c = 0; c < feature_columns.size(); ++c) {
      const auto& name = feature_columns[c];
      const auto codes = encoders.at(name).encode(imputed.column(name));
      for (std::size_t r = 0; r < codes.size(); ++r) out(r, c) = static_cast<double>(codes[r]);
    }
    out.set_feature_names(feature_columns);
    return out;
  }

  /// Full replay for new rows: impute, encode, scale.
  FeatureMatrix transform(const Table& table) const { return apply_scaler(scaler, encode_features(table)); }

  friend bool operator==(const FittedPreprocessor&, const FittedPreprocessor&) = default;
};

inline LabelVector target_labels(const Table& table) {
  const auto& target = table.schema.target();
  LabelVector y;
  y.reserve(table.n_rows());
  for (const auto& cell : table.target_column()) {
    if (!cell) fail(ErrorCode::TargetMissingEntries, "missing target cell");
    if (*cell == target.positive_label)
      y.push_back(1);
    else if (*cell == target.negative_label)
      y.push_back(0);
    else
      fail(ErrorCode::InvalidTargetValue, *cell);
  }
  return y;
}

struct PreparedData {
  FittedPreprocessor preprocessor;
  FeatureMatrix x_train;  // after SMOTE and scaling
  LabelVector y_train;
  FeatureMatrix x_test;  // scaled
  LabelVector y_test;
  std::size_t n_train_original = 0;
  std::vector<std::string> warnings;
};

inline PreparedData prepare(const Table& table, const PipelineOptions& options) {
  PreparedData out;
  auto& pre = out.preprocessor;
  pre.feature_columns = table.schema.feature_names();
  pre.target_column = table.schema.target().name;
  pre.positive_label = table.schema.target().positive_label;
  pre.negative_label = table.schema.target().negative_label;
  pre.test_fraction = options.test_fraction;

  const LabelVector y = target_labels(table);
  pre.split = stratified_split(y, options.test_fraction, derive_seed(options.seed, 1));
  const Table train = table.select_rows(pre.split.train_rows);
  const Table test = table.select_rows(pre.split.test_rows);

  pre.imputer = fit_imputer(train, pre.feature_columns);
  const Table train_imputed = apply_imputer(pre.imputer, train);
  for (const auto& name : pre.feature_columns) pre.encoders.emplace(name, fit_encoder(train_imputed.column(name)));

  FeatureMatrix x_train = pre.encode_features(train);
  LabelVector y_train = select_labels(y, pre.split.train_rows);
  out.n_train_original = y_train.size();

  pre.smote_enabled = options.smote;
  pre.smote_k = options.smote_k;
  pre.smote_seed = derive_seed(options.seed, 2);
  if (options.smote) {
    auto balanced = smote_oversample(x_train, y_train, {options.smote_k, pre.smote_seed, std::nullopt});
    pre.smote_k_used = balanced.k_used;
    pre.n_synthetic = balanced.origins.size();
    out.warnings = std::move(balanced.warnings);
    x_train = std::move(balanced.features);
    y_train = std::move(balanced.labels);
  }

  pre.scaler = fit_scaler(x_train);
  out.x_train = apply_scaler(pre.scaler, x_train);
  out.x_train.set_feature_names(pre.feature_columns);
  out.y_train = std::move(y_train);
  out.x_test = pre.transform(test);
  out.y_test = select_labels(y, pre.split.test_rows);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const FittedPreprocessor& p) {
  nlohmann::json encoders = nlohmann::json::object();
  for (const auto& [name, enc] : p.encoders) encoders[name] = enc.categories();
  return {
      {"format_version", kPreprocessorFormatVersion},
      {"feature_columns", p.feature_columns},
      {"target", {{"column", p.target_column}, {"positive", p.positive_label}, {"negative", p.negative_label}}},
      {"imputer", p.imputer.modes},
      {"encoders", encoders},
      {"scaler", {{"mean", p.scaler.mean}, {"std", p.scaler.stddev}}},
      {"split",
       {{"seed", p.split.seed},
        {"test_fraction", p.test_fraction},
        {"train_rows", p.split.train_rows},
        {"test_rows", p.split.test_rows}}},
      {"smote",
       {{"enabled", p.smote_enabled},
        {"k", p.smote_k},
        {"k_used", p.smote_k_used},
        {"seed", p.smote_seed},
        {"n_synthetic", p.n_synthetic}}},
  };
}

inline FittedPreprocessor preprocessor_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    require(version == kPreprocessorFormatVersion, ErrorCode::Config,
            "unsupported preprocessor format " + std::to_string(version));
    FittedPreprocessor p;
    p.feature_columns = j.at("feature_columns").get<std::vector<std::string>>();
    const auto& t = j.at("target");
    p.target_column = t.at("column").get<std::string>();
    p.positive_label = t.at("positive").get<std::string>();
    p.negative_label = t.at("negative").get<std::string>();
    p.imputer.modes = j.at("imputer").get<std::map<std::string, std::string>>();
    for (const auto& [name, cats] : j.at("encoders").items())
      p.encoders.emplace(name, LabelEncoder::from_categories(cats.get<std::vector<std::string>>()));
    p.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    p.scaler.stddev = j.at("scaler").at("std").get<std::vector<double>>();
    const auto& s = j.at("split");
    p.split.seed = s.at("seed").get<std::uint64_t>();
    p.test_fraction = s.at("test_fraction").get<double>();
    p.split.train_rows = s.at("train_rows").get<std::vector<std::size_t>>();
    p.split.test_rows = s.at("test_rows").get<std::vector<std::size_t>>();
    const auto& sm = j.at("smote");
    p.smote_enabled = sm.at("enabled").get<bool>();
    p.smote_k = sm.at("k").get<std::size_t>();
    p.smote_k_used = sm.at("k_used").get<std::size_t>();
    p.smote_seed = sm.at("seed").get<std::uint64_t>();
    p.n_synthetic = sm.at("n_synthetic").get<std::size_t>();
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, std::string("preprocessor document: ") + e.what());
  }
}

}  // namespace voteml
