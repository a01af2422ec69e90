#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/matrix.hpp"

namespace voteml {

struct LogisticHyper {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double l2 = 0.01;
};

struct LogisticModel {
  static constexpr std::string_view kKind = "logreg";

  std::vector<double> weights;
  double bias = 0.0;

  std::size_t n_features() const { return weights.size(); }

  double decision(std::span<const double> row) const { return dot(weights, row) + bias; }

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    std::vector<double> p(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) p[r] = sigmoid(decision(x.row(r)));
    return p;
  }

  nlohmann::json to_json() const { return {{"kind", kKind}, {"weights", weights}, {"bias", bias}}; }
  static LogisticModel from_json(const nlohmann::json& j) {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
  }
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> d_weights;
  double d_bias = 0.0;
};

/// Mean binary cross-entropy plus (l2 / 2) * ||w||^2, and its gradient.
inline LossGradient logistic_loss_gradient(const FeatureMatrix& x, const LabelVector& y,
                                           std::span<const double> w, double b, double l2) {
  LossGradient g{0.0, std::vector<double>(w.size(), 0.0), 0.0};
  const auto n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const double z = dot(w, row) + b;
    g.loss += logit_loss(z, y[r]);
    const double residual = sigmoid(z) - y[r];
    for (std::size_t c = 0; c < w.size(); ++c) g.d_weights[c] += residual * row[c];
    g.d_bias += residual;
  }
  g.loss /= n;
  g.d_bias /= n;
  double sq = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    g.d_weights[c] = g.d_weights[c] / n + l2 * w[c];
    sq += w[c] * w[c];
  }
  g.loss += 0.5 * l2 * sq;
  return g;
}

/// Full-batch gradient descent from zero weights. The seed is accepted for
/// contract uniformity; the procedure itself draws no randomness.
inline LogisticModel fit_logistic(const FeatureMatrix& x, const LabelVector& y, const LogisticHyper& hyper,
                                  std::uint64_t /*seed*/) {
  check_xy(x, y);
  require(x.rows() > 0, ErrorCode::InvalidArgument, "empty training set");
  LogisticModel m{std::vector<double>(x.cols(), 0.0), 0.0};
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto g = logistic_loss_gradient(x, y, m.weights, m.bias, hyper.l2);
    if (!std::isfinite(g.loss))
      fail(ErrorCode::NonFiniteLoss, "logistic regression diverged at epoch " + std::to_string(epoch));
    for (std::size_t c = 0; c < m.weights.size(); ++c) m.weights[c] -= hyper.learning_rate * g.d_weights[c];
    m.bias -= hyper.learning_rate * g.d_bias;
  }
  for (double w : m.weights)
    if (!std::isfinite(w)) fail(ErrorCode::NonFiniteLoss, "logistic regression weights overflowed");
  if (!std::isfinite(m.bias)) fail(ErrorCode::NonFiniteLoss, "logistic regression bias overflowed");
  return m;
}

using LogisticRegression = ModelClassifier<LogisticModel, LogisticHyper, fit_logistic>;

}  // namespace voteml
