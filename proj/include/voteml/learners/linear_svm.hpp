#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/learners/logistic.hpp"
#include "voteml/matrix.hpp"

namespace voteml {

struct LinearSvmHyper {
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  double c = 1.0;
};

/// p(y=1 | f) = 1 / (1 + exp(a * f + b)).
struct PlattScaling {
  double a = -1.0;
  double b = 0.0;

  double operator()(double decision) const { return sigmoid(-(a * decision + b)); }
};

/// Fits Platt's sigmoid to decision values by Newton's method with
/// backtracking, using the smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2).
inline PlattScaling fit_platt(std::span<const double> decisions, const LabelVector& y) {
  double n_pos = 0, n_neg = 0;
  for (auto v : y) (v ? n_pos : n_neg) += 1.0;
  const double hi = (n_pos + 1.0) / (n_pos + 2.0);
  const double lo = 1.0 / (n_neg + 2.0);
  std::vector<double> t(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) t[i] = y[i] ? hi : lo;

  // Loss in terms of z = a f + b, with p = sigmoid(-z).
  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double z = a * decisions[i] + b;
      f += t[i] * softplus(z) + (1.0 - t[i]) * softplus(-z);
    }
    return f;
  };

  PlattScaling s{0.0, std::log((n_neg + 1.0) / (n_pos + 1.0))};
  double f = objective(s.a, s.b);
  for (int iter = 0; iter < 100; ++iter) {
    double g1 = 0, g2 = 0, h11 = 1e-12, h22 = 1e-12, h21 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double z = s.a * decisions[i] + s.b;
      const double p = sigmoid(-z);
      const double d1 = t[i] - p;  // d loss / d z
      const double d2 = p * (1.0 - p);
      g1 += decisions[i] * d1;
      g2 += d1;
      h11 += decisions[i] * decisions[i] * d2;
      h22 += d2;
      h21 += decisions[i] * d2;
    }
    if (std::abs(g1) < 1e-10 && std::abs(g2) < 1e-10) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    double step = 1.0;
    bool moved = false;
    while (step >= 1e-10) {
      const double na = s.a + step * da, nb = s.b + step * db;
      const double nf = objective(na, nb);
      if (nf < f + 1e-4 * step * (g1 * da + g2 * db)) {
        s = {na, nb};
        f = nf;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return s;
}

struct LinearSvmModel {
  static constexpr std::string_view kKind = "svm";

  std::vector<double> weights;
  double bias = 0.0;
  PlattScaling platt;

  std::size_t n_features() const { return weights.size(); }
  double decision(std::span<const double> row) const { return dot(weights, row) + bias; }

  std::vector<double> predict_proba(const FeatureMatrix& x) const {
    std::vector<double> p(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) p[r] = platt(decision(x.row(r)));
    return p;
  }

  nlohmann::json to_json() const {
    return {{"kind", kKind}, {"weights", weights}, {"bias", bias}, {"platt", {{"a", platt.a}, {"b", platt.b}}}};
  }
  static LinearSvmModel from_json(const nlohmann::json& j) {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>(),
            {j.at("platt").at("a").get<double>(), j.at("platt").at("b").get<double>()}};
  }
};

/// ||w||^2 / (2 C n) + mean hinge, and a sub-gradient (zero hinge slope is
/// taken at the kink).
inline LossGradient svm_objective_subgradient(const FeatureMatrix& x, const LabelVector& y,
                                              std::span<const double> w, double b, double c) {
  const auto n = static_cast<double>(x.rows());
  const double reg = 1.0 / (c * n);
  LossGradient g{0.0, std::vector<double>(w.size(), 0.0), 0.0};
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const double s = y[r] ? 1.0 : -1.0;
    const double margin = s * (dot(w, row) + b);
    if (margin < 1.0) {
      g.loss += 1.0 - margin;
      for (std::size_t k = 0; k < w.size(); ++k) g.d_weights[k] -= s * row[k];
      g.d_bias -= s;
    }
  }
  g.loss /= n;
  g.d_bias /= n;
  double sq = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    g.d_weights[k] = g.d_weights[k] / n + reg * w[k];
    sq += w[k] * w[k];
  }
  g.loss += 0.5 * reg * sq;
  return g;
}

/// Full-batch sub-gradient descent with step learning_rate / sqrt(t + 1);
/// the best iterate by objective is kept, then Platt scaling is fitted on the
/// training decision values.
inline LinearSvmModel fit_linear_svm(const FeatureMatrix& x, const LabelVector& y, const LinearSvmHyper& hyper,
                                     std::uint64_t /*seed*/) {
  check_xy(x, y);
  require(x.rows() > 0, ErrorCode::InvalidArgument, "empty training set");
  require(hyper.c > 0, ErrorCode::InvalidArgument, "C must be positive");
  std::vector<double> w(x.cols(), 0.0);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = b;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < hyper.epochs; ++t) {
    const auto g = svm_objective_subgradient(x, y, w, b, hyper.c);
    if (!std::isfinite(g.loss)) fail(ErrorCode::NonFiniteLoss, "SVM diverged at epoch " + std::to_string(t));
    if (g.loss < best) {
      best = g.loss;
      best_w = w;
      best_b = b;
    }
    const double step = hyper.learning_rate / std::sqrt(static_cast<double>(t) + 1.0);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * g.d_weights[k];
    b -= step * g.d_bias;
  }
  const auto final_loss = svm_objective_subgradient(x, y, w, b, hyper.c).loss;
  if (!std::isfinite(final_loss)) fail(ErrorCode::NonFiniteLoss, "SVM diverged");
  if (final_loss < best) {
    best_w = w;
    best_b = b;
  }

  LinearSvmModel m{std::move(best_w), best_b, {}};
  std::vector<double> decisions(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) decisions[r] = m.decision(x.row(r));
  m.platt = fit_platt(decisions, y);
  return m;
}

using LinearSvm = ModelClassifier<LinearSvmModel, LinearSvmHyper, fit_linear_svm>;

}  // namespace voteml
