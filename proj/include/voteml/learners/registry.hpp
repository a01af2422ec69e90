#pragma once

// Model kinds by name: construction from a JSON parameter block and replay
// from a saved model document.

#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/learners/forest.hpp"
#include "voteml/learners/gbt.hpp"
#include "voteml/learners/linear_svm.hpp"
#include "voteml/learners/logistic.hpp"
#include "voteml/learners/mlp.hpp"
#include "voteml/learners/tree.hpp"

namespace voteml {

inline constexpr int kModelFormatVersion = 1;

inline const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds{"logreg", "svm", "tree", "forest", "gbt_xgb", "gbt_lgbm", "mlp"};
  return kinds;
}

namespace detail {

/// Reads `params` into the listed fields, rejecting keys it does not know.
class ParamReader {
 public:
  ParamReader(const nlohmann::json& params, std::string kind) : params_(params), kind_(std::move(kind)) {
    if (!params_.is_null() && !params_.is_object()) fail(ErrorCode::Config, kind_ + " params must be an object");
  }

  template <class T>
  void read(const char* key, T& field) {
    known_.insert(key);
    if (params_.is_null() || !params_.contains(key)) return;
    try {
      field = params_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::Config, kind_ + "." + key + " has the wrong type");
    }
  }

  void finish() const {
    if (params_.is_null()) return;
    for (const auto& [key, value] : params_.items())
      if (!known_.contains(key)) fail(ErrorCode::Config, "unknown parameter " + kind_ + "." + key);
  }

 private:
  nlohmann::json params_;
  std::string kind_;
  std::set<std::string> known_;
};

inline void read_callbacks(const nlohmann::json& j, MlpCallbacks& cb) {
  if (j.is_null()) return;
  if (j.contains("early_stopping")) {
    const auto& e = j.at("early_stopping");
    if (e.is_boolean() && !e.get<bool>()) {
      cb.early_stopping.reset();
    } else {
      EarlyStopConfig c;
      ParamReader r(e.is_boolean() ? nlohmann::json{} : e, "early_stopping");
      r.read("patience", c.patience);
      r.read("min_delta", c.min_delta);
      r.finish();
      cb.early_stopping = c;
    }
  }
  if (j.contains("plateau")) {
    const auto& e = j.at("plateau");
    if (e.is_boolean() && !e.get<bool>()) {
      cb.plateau.reset();
    } else {
      PlateauConfig c;
      ParamReader r(e.is_boolean() ? nlohmann::json{} : e, "plateau");
      r.read("factor", c.factor);
      r.read("patience", c.patience);
      r.read("min_lr", c.min_lr);
      r.read("min_delta", c.min_delta);
      r.finish();
      cb.plateau = c;
    }
  }
}

}  // namespace detail

inline MlpHyper mlp_hyper_from_json(const nlohmann::json& params) {
  MlpHyper h;
  detail::ParamReader r(params, "mlp");
  r.read("hidden", h.hidden);
  r.read("dropout", h.dropout);
  r.read("batch_size", h.batch_size);
  r.read("max_epochs", h.max_epochs);
  r.read("learning_rate", h.learning_rate);
  r.read("momentum", h.momentum);
  r.read("validation_fraction", h.validation_fraction);
  r.read("bn_epsilon", h.bn_epsilon);
  r.read("bn_momentum", h.bn_momentum);
  nlohmann::json callbacks;
  r.read("callbacks", callbacks);
  r.finish();
  detail::read_callbacks(callbacks, h.callbacks);
  if (h.hidden.empty()) fail(ErrorCode::Config, "mlp.hidden must list at least one layer");
  if (!(h.dropout >= 0.0 && h.dropout < 1.0)) fail(ErrorCode::Config, "mlp.dropout must lie in [0, 1)");
  if (!(h.validation_fraction >= 0.0 && h.validation_fraction < 1.0))
    fail(ErrorCode::Config, "mlp.validation_fraction must lie in [0, 1)");
  if (h.batch_size < 2) fail(ErrorCode::Config, "mlp.batch_size must be at least 2");
  if (!(h.learning_rate > 0.0)) fail(ErrorCode::Config, "mlp.learning_rate must be positive");
  return h;
}

inline GbtHyper gbt_hyper_from_json(const nlohmann::json& params, GbtPreset preset) {
  GbtHyper h = preset == GbtPreset::LgbmLike ? GbtHyper::lgbm_like() : GbtHyper::xgb_like();
  detail::ParamReader r(params, preset == GbtPreset::LgbmLike ? "gbt_lgbm" : "gbt_xgb");
  r.read("n_rounds", h.n_rounds);
  r.read("learning_rate", h.learning_rate);
  r.read("max_depth", h.max_depth);
  r.read("max_leaves", h.max_leaves);
  r.read("min_samples_leaf", h.min_samples_leaf);
  r.read("lambda", h.lambda);
  r.finish();
  if (h.n_rounds < 1) fail(ErrorCode::Config, "n_rounds must be at least 1");
  if (!(h.learning_rate >= 0.0 && h.learning_rate <= 1.0)) fail(ErrorCode::Config, "gbt learning_rate must lie in [0, 1]");
  if (!(h.lambda >= 0.0)) fail(ErrorCode::Config, "gbt lambda must be non-negative");
  return h;
}

/// A fresh, unfitted learner of the named kind.
inline std::unique_ptr<Classifier> make_classifier(const std::string& kind, const nlohmann::json& params = {}) {
  if (kind == "logreg") {
    LogisticHyper h;
    detail::ParamReader r(params, kind);
    r.read("learning_rate", h.learning_rate);
    r.read("epochs", h.epochs);
    r.read("l2", h.l2);
    r.finish();
    return std::make_unique<LogisticRegression>(h);
  }
  if (kind == "svm") {
    LinearSvmHyper h;
    detail::ParamReader r(params, kind);
    r.read("learning_rate", h.learning_rate);
    r.read("epochs", h.epochs);
    r.read("c", h.c);
    r.finish();
    if (!(h.c > 0.0)) fail(ErrorCode::Config, "svm.c must be positive");
    return std::make_unique<LinearSvm>(h);
  }
  if (kind == "tree") {
    TreeHyper h;
    detail::ParamReader r(params, kind);
    r.read("max_depth", h.max_depth);
    r.read("min_samples_leaf", h.min_samples_leaf);
    r.read("max_features", h.max_features);
    r.finish();
    return std::make_unique<DecisionTreeClassifier>(h);
  }
  if (kind == "forest") {
    ForestHyper h;
    detail::ParamReader r(params, kind);
    r.read("n_trees", h.n_trees);
    r.read("max_depth", h.max_depth);
    r.read("min_samples_leaf", h.min_samples_leaf);
    r.read("max_features", h.max_features);
    r.read("bootstrap", h.bootstrap);
    r.read("n_threads", h.n_threads);
    r.finish();
    if (h.n_trees < 1) fail(ErrorCode::Config, "forest.n_trees must be at least 1");
    return std::make_unique<RandomForest>(h);
  }
  if (kind == "gbt_xgb") return std::make_unique<GradientBoosting>(gbt_hyper_from_json(params, GbtPreset::XgbLike));
  if (kind == "gbt_lgbm") return std::make_unique<GradientBoosting>(gbt_hyper_from_json(params, GbtPreset::LgbmLike));
  if (kind == "mlp") return std::make_unique<MlpClassifier>(mlp_hyper_from_json(params));
  fail(ErrorCode::Config, "unknown model kind '" + kind + "'");
}

/// Saved form of a fitted learner: its own JSON plus a format version.
inline nlohmann::json model_document(const Classifier& model) {
  auto j = model.to_json();
  j["format_version"] = kModelFormatVersion;
  return j;
}

/// Rebuilds a fitted learner from model_document() output.
inline std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j) {
  require(j.value("format_version", 0) == kModelFormatVersion, ErrorCode::Io, "unsupported model format version");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == LogisticModel::kKind) return std::make_unique<LogisticRegression>(LogisticModel::from_json(j));
  if (kind == LinearSvmModel::kKind) return std::make_unique<LinearSvm>(LinearSvmModel::from_json(j));
  if (kind == TreeModel::kKind) return std::make_unique<DecisionTreeClassifier>(TreeModel::from_json(j));
  if (kind == ForestModel::kKind) return std::make_unique<RandomForest>(ForestModel::from_json(j));
  if (kind == GbtModel::kKind) return std::make_unique<GradientBoosting>(GbtModel::from_json(j));
  if (kind == MlpModel::kKind) return std::make_unique<MlpClassifier>(MlpModel::from_json(j));
  fail(ErrorCode::Io, "unknown model kind '" + kind + "' in model document");
}

}  // namespace voteml
