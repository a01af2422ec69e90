#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/error.hpp"
#include "voteml/matrix.hpp"

namespace voteml {

inline constexpr double kDefaultThreshold = 0.5;

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Binary cross-entropy of a logit against a 0/1 label.
inline double logit_loss(double z, double y) { return softplus(z) - y * z; }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Uniform contract over every learner: fit on (features, labels, seed),
/// then report the class-1 probability per row.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::string kind() const = 0;
  virtual void fit(const FeatureMatrix& x, const LabelVector& y, std::uint64_t seed) = 0;
  virtual bool fitted() const = 0;
  virtual std::size_t n_features() const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    require(fitted(), ErrorCode::InvalidArgument, kind() + " used before fit");
    require(x.cols() == n_features(), ErrorCode::DimensionMismatch,
            kind() + " expects " + std::to_string(n_features()) + " features, got " +
                std::to_string(x.cols()));
    return compute_proba(x);
  }

 protected:
  virtual std::vector<double> compute_proba(const FeatureMatrix& x) const = 0;
};

/// Label 1 exactly where the probability reaches the threshold.
inline LabelVector predict(std::span<const double> probabilities, double threshold = kDefaultThreshold) {
  LabelVector out(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) out[i] = probabilities[i] >= threshold ? 1 : 0;
  return out;
}

inline LabelVector predict(const Classifier& model, const FeatureMatrix& x, double threshold = kDefaultThreshold) {
  return predict(model.predict_proba(x), threshold);
}

/// Adapts a (model, hyperparameter, fit function) triple to Classifier.
/// `Model` must expose `kKind`, `n_features()`, `predict_proba(x)` and `to_json()`.
template <class Model, class Hyper,
          Model (*FitFn)(const FeatureMatrix&, const LabelVector&, const Hyper&, std::uint64_t)>
class ModelClassifier final : public Classifier {
 public:
  explicit ModelClassifier(Hyper hyper = {}) : hyper_(std::move(hyper)) {}
  explicit ModelClassifier(Model model, Hyper hyper = {}) : hyper_(std::move(hyper)), model_(std::move(model)) {}

  std::string kind() const override { return std::string(Model::kKind); }
  void fit(const FeatureMatrix& x, const LabelVector& y, std::uint64_t seed) override {
    model_ = FitFn(x, y, hyper_, seed);
  }
  bool fitted() const override { return model_.has_value(); }
  std::size_t n_features() const override { return model_ ? model_->n_features() : 0; }
  nlohmann::json to_json() const override {
    require(fitted(), ErrorCode::InvalidArgument, "serialising an unfitted model");
    return model_->to_json();
  }

  const Model& model() const { return *model_; }
  const Hyper& hyper() const { return hyper_; }

 protected:
  std::vector<double> compute_proba(const FeatureMatrix& x) const override { return model_->predict_proba(x); }

 private:
  Hyper hyper_;
  std::optional<Model> model_;
};

}  // namespace voteml
