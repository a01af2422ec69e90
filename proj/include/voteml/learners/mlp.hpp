#pragma once

// Feed-forward binary classifier: each hidden layer is
// affine -> batch-norm -> ReLU -> dropout, followed by affine -> sigmoid.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/matrix.hpp"
#include "voteml/preprocess.hpp"
#include "voteml/random.hpp"
#include "voteml/training_control.hpp"

namespace voteml {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

struct MlpCallbacks {
  std::optional<EarlyStopConfig> early_stopping = EarlyStopConfig{};
  std::optional<PlateauConfig> plateau = PlateauConfig{};
};

struct MlpHyper {
  std::vector<std::size_t> hidden{1024, 512, 256, 128};
  double dropout = 0.3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double validation_fraction = 0.1;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.9;
  MlpCallbacks callbacks;
};

struct HiddenLayer {
  MatrixXd weight;  // fan_in x width
  RowVectorXd bias;
  RowVectorXd gamma;
  RowVectorXd beta;
  RowVectorXd running_mean;
  RowVectorXd running_var;

  std::size_t width() const { return static_cast<std::size_t>(weight.cols()); }
};

struct MlpModel {
  static constexpr std::string_view kKind = "mlp";

  std::size_t input_width = 0;
  std::vector<HiddenLayer> hidden;
  VectorXd out_weight;
  double out_bias = 0.0;
  double dropout = 0.0;
  double bn_epsilon = 1e-5;
  double bn_momentum = 0.9;

  std::size_t n_features() const { return input_width; }
  std::vector<double> predict_proba(const FeatureMatrix& x) const;
  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

/// He-uniform hidden weights, Xavier-uniform output weights, zero biases,
/// identity batch-norm.
inline MlpModel init_mlp(std::size_t input_width, const MlpHyper& hyper, std::uint64_t seed) {
  MlpModel m;
  m.input_width = input_width;
  m.dropout = hyper.dropout;
  m.bn_epsilon = hyper.bn_epsilon;
  m.bn_momentum = hyper.bn_momentum;
  Rng rng(seed);
  std::size_t fan_in = input_width;
  for (auto width : hyper.hidden) {
    require(width > 0, ErrorCode::InvalidArgument, "hidden width must be positive");
    HiddenLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    layer.weight.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(width));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
    const auto w = static_cast<Eigen::Index>(width);
    layer.bias = RowVectorXd::Zero(w);
    layer.gamma = RowVectorXd::Ones(w);
    layer.beta = RowVectorXd::Zero(w);
    layer.running_mean = RowVectorXd::Zero(w);
    layer.running_var = RowVectorXd::Ones(w);
    m.hidden.push_back(std::move(layer));
    fan_in = width;
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + 1));
  m.out_weight.resize(static_cast<Eigen::Index>(fan_in));
  for (Eigen::Index i = 0; i < m.out_weight.size(); ++i) m.out_weight(i) = rng.uniform(-limit, limit);
  return m;
}

enum class MlpMode { Train, Infer };

struct LayerCache {
  MatrixXd input;     // layer input (batch x fan_in)
  MatrixXd xhat;      // normalised pre-activation
  MatrixXd relu;      // ReLU output before dropout
  MatrixXd mask;      // inverted-dropout multipliers; empty when no dropout
  RowVectorXd inv_std;
  RowVectorXd batch_mean;
  RowVectorXd batch_var;  // biased
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  MatrixXd last;  // input to the output layer
  VectorXd logits;
};

struct ForwardResult {
  std::vector<double> probabilities;
  ForwardCache cache;
};

inline MatrixXd to_eigen(const FeatureMatrix& x) {
  MatrixXd out(static_cast<Eigen::Index>(x.rows()), static_cast<Eigen::Index>(x.cols()));
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(r, c);
  return out;
}

/// Pure forward pass. Train mode normalises with batch statistics and, when
/// `dropout` > 0, applies an inverted-dropout mask drawn from `seed`; infer
/// mode uses the running statistics and no dropout.
inline ForwardCache forward_pass(const MlpModel& model, const MatrixXd& x, MlpMode mode, std::uint64_t seed,
                                 double dropout) {
  require(static_cast<std::size_t>(x.cols()) == model.input_width, ErrorCode::DimensionMismatch,
          "MLP expects " + std::to_string(model.input_width) + " inputs, got " + std::to_string(x.cols()));
  if (mode == MlpMode::Train)
    require(x.rows() >= 2, ErrorCode::BatchTooSmall,
            "train-mode batch of " + std::to_string(x.rows()) + " rows; batch variance needs at least 2");

  ForwardCache cache;
  MatrixXd a = x;
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    const auto& layer = model.hidden[l];
    LayerCache lc;
    lc.input = std::move(a);
    MatrixXd z = lc.input * layer.weight;
    z.rowwise() += layer.bias;
    if (mode == MlpMode::Train) {
      lc.batch_mean = z.colwise().mean();
      lc.batch_var = (z.rowwise() - lc.batch_mean).array().square().colwise().mean().matrix();
      lc.inv_std = (lc.batch_var.array() + model.bn_epsilon).sqrt().inverse().matrix();
      lc.xhat = ((z.rowwise() - lc.batch_mean).array().rowwise() * lc.inv_std.array()).matrix();
    } else {
      lc.inv_std = (layer.running_var.array() + model.bn_epsilon).sqrt().inverse().matrix();
      lc.xhat = ((z.rowwise() - layer.running_mean).array().rowwise() * lc.inv_std.array()).matrix();
    }
    MatrixXd y = (lc.xhat.array().rowwise() * layer.gamma.array()).matrix();
    y.rowwise() += layer.beta;
    lc.relu = y.cwiseMax(0.0);
    if (mode == MlpMode::Train && dropout > 0.0) {
      Rng rng(derive_seed(seed, l));
      const double keep = 1.0 - dropout;
      lc.mask.resize(lc.relu.rows(), lc.relu.cols());
      for (Eigen::Index c = 0; c < lc.mask.cols(); ++c)
        for (Eigen::Index r = 0; r < lc.mask.rows(); ++r) lc.mask(r, c) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      a = lc.relu.cwiseProduct(lc.mask);
    } else {
      a = lc.relu;
    }
    cache.layers.push_back(std::move(lc));
  }
  cache.logits = a * model.out_weight;
  cache.logits.array() += model.out_bias;
  cache.last = std::move(a);
  return cache;
}

/// Moves running statistics towards the batch statistics of a train pass.
inline void update_running_stats(MlpModel& model, const ForwardCache& cache) {
  const double mom = model.bn_momentum;
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    auto& layer = model.hidden[l];
    layer.running_mean = mom * layer.running_mean + (1.0 - mom) * cache.layers[l].batch_mean;
    layer.running_var = mom * layer.running_var + (1.0 - mom) * cache.layers[l].batch_var;
  }
}

inline std::vector<double> logits_to_probabilities(const VectorXd& logits) {
  std::vector<double> p(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) p[static_cast<std::size_t>(i)] = sigmoid(logits(i));
  return p;
}

/// Forward pass with the model's own dropout rate; train mode also updates
/// the running batch-norm statistics.
inline ForwardResult mlp_forward(MlpModel& model, const MatrixXd& x, MlpMode mode, std::uint64_t seed) {
  ForwardResult out;
  out.cache = forward_pass(model, x, mode, seed, model.dropout);
  if (mode == MlpMode::Train) update_running_stats(model, out.cache);
  out.probabilities = logits_to_probabilities(out.cache.logits);
  return out;
}

inline std::vector<double> MlpModel::predict_proba(const FeatureMatrix& x) const {
  std::vector<double> out;
  out.reserve(x.rows());
  constexpr std::size_t chunk = 1024;
  for (std::size_t start = 0; start < x.rows(); start += chunk) {
    const std::size_t n = std::min(chunk, x.rows() - start);
    MatrixXd block(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(x.cols()));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < x.cols(); ++c)
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(start + r, c);
    const auto p = logits_to_probabilities(forward_pass(*this, block, MlpMode::Infer, 0, 0.0).logits);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

inline double mean_bce(const VectorXd& logits, const VectorXd& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) s += logit_loss(logits(i), y(i));
  return logits.size() ? s / static_cast<double>(logits.size()) : 0.0;
}

struct LayerGradients {
  MatrixXd weight;
  RowVectorXd bias;
  RowVectorXd gamma;
  RowVectorXd beta;
};

struct MlpGradients {
  std::vector<LayerGradients> hidden;
  VectorXd out_weight;
  double out_bias = 0.0;
};

/// Gradient of mean binary cross-entropy with respect to every trainable
/// parameter, for a cache produced by a train-mode pass.
inline MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache, const VectorXd& y) {
  const auto batch = static_cast<double>(y.size());
  MlpGradients g;
  g.hidden.resize(model.hidden.size());

  VectorXd dz(cache.logits.size());
  for (Eigen::Index i = 0; i < dz.size(); ++i) dz(i) = (sigmoid(cache.logits(i)) - y(i)) / batch;
  g.out_weight = cache.last.transpose() * dz;
  g.out_bias = dz.sum();
  MatrixXd da = dz * model.out_weight.transpose();

  for (std::size_t li = model.hidden.size(); li-- > 0;) {
    const auto& layer = model.hidden[li];
    const auto& lc = cache.layers[li];
    auto& lg = g.hidden[li];
    if (lc.mask.size()) da = da.cwiseProduct(lc.mask);
    MatrixXd dy = (lc.relu.array() > 0.0).select(da, 0.0);
    lg.gamma = dy.cwiseProduct(lc.xhat).colwise().sum();
    lg.beta = dy.colwise().sum();
    const MatrixXd dxhat = (dy.array().rowwise() * layer.gamma.array()).matrix();
    const RowVectorXd sum_dxhat = dxhat.colwise().sum();
    const RowVectorXd sum_dxhat_xhat = dxhat.cwiseProduct(lc.xhat).colwise().sum();
    MatrixXd dzl = batch * dxhat;
    dzl.rowwise() -= sum_dxhat;
    dzl -= (lc.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
    dzl = (dzl.array().rowwise() * (lc.inv_std.array() / batch)).matrix();
    lg.weight = lc.input.transpose() * dzl;
    lg.bias = dzl.colwise().sum();
    if (li > 0) da = dzl * layer.weight.transpose();
  }
  return g;
}

struct HistoryRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct TrainingHistory {
  std::vector<HistoryRecord> records;
  std::size_t best_epoch = 0;
  bool stopped_early = false;

  friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

inline constexpr std::string_view kHistoryHeader = "epoch,train_loss,train_acc,val_loss,val_acc,lr";

inline std::string history_csv(const TrainingHistory& h) {
  std::string out = std::string(kHistoryHeader) + "\n";
  for (const auto& r : h.records)
    out += csv::join({std::to_string(r.epoch), csv::format_number(r.train_loss), csv::format_number(r.train_acc),
                      csv::format_number(r.val_loss), csv::format_number(r.val_acc), csv::format_number(r.lr)}) +
           "\n";
  return out;
}

inline TrainingHistory parse_history_csv(std::string_view text) {
  const auto records = csv::parse(text);
  require(!records.empty() && csv::join(records.front().fields) == kHistoryHeader, ErrorCode::Io,
          "history header mismatch");
  TrainingHistory h;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    require(f.size() == 6, ErrorCode::RaggedRow, "history line " + std::to_string(records[i].line));
    HistoryRecord r;
    r.epoch = static_cast<std::size_t>(std::stoull(f[0]));
    double* slots[] = {&r.train_loss, &r.train_acc, &r.val_loss, &r.val_acc, &r.lr};
    for (std::size_t k = 0; k < 5; ++k) {
      const auto v = csv::parse_number(f[k + 1]);
      require(v.has_value(), ErrorCode::Io, "bad number '" + f[k + 1] + "'");
      *slots[k] = *v;
    }
    h.records.push_back(r);
  }
  return h;
}

struct MlpFit {
  MlpModel model;
  TrainingHistory history;
};

namespace detail {

struct Momentum {
  std::vector<LayerGradients> hidden;
  VectorXd out_weight;
  double out_bias = 0.0;

  explicit Momentum(const MlpModel& m) {
    for (const auto& l : m.hidden)
      hidden.push_back({MatrixXd::Zero(l.weight.rows(), l.weight.cols()), RowVectorXd::Zero(l.bias.size()),
                        RowVectorXd::Zero(l.gamma.size()), RowVectorXd::Zero(l.beta.size())});
    out_weight = VectorXd::Zero(m.out_weight.size());
  }
};

inline bool all_finite(const MlpGradients& g) {
  if (!std::isfinite(g.out_bias) || !g.out_weight.allFinite()) return false;
  for (const auto& l : g.hidden)
    if (!l.weight.allFinite() || !l.bias.allFinite() || !l.gamma.allFinite() || !l.beta.allFinite()) return false;
  return true;
}

// v <- mu v - lr g ; p <- p + v
inline void sgd_step(MlpModel& m, Momentum& v, const MlpGradients& g, double lr, double mu) {
  for (std::size_t l = 0; l < m.hidden.size(); ++l) {
    auto& p = m.hidden[l];
    auto& vl = v.hidden[l];
    const auto& gl = g.hidden[l];
    vl.weight = mu * vl.weight - lr * gl.weight;
    vl.bias = mu * vl.bias - lr * gl.bias;
    vl.gamma = mu * vl.gamma - lr * gl.gamma;
    vl.beta = mu * vl.beta - lr * gl.beta;
    p.weight += vl.weight;
    p.bias += vl.bias;
    p.gamma += vl.gamma;
    p.beta += vl.beta;
  }
  v.out_weight = mu * v.out_weight - lr * g.out_weight;
  v.out_bias = mu * v.out_bias - lr * g.out_bias;
  m.out_weight += v.out_weight;
  m.out_bias += v.out_bias;
}

inline VectorXd label_vector(const LabelVector& y, std::span<const std::size_t> rows) {
  VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = y[rows[i]];
  return out;
}

inline double accuracy_of(const VectorXd& logits, const VectorXd& y) {
  double hits = 0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) hits += ((sigmoid(logits(i)) >= 0.5 ? 1.0 : 0.0) == y(i));
  return logits.size() ? hits / static_cast<double>(logits.size()) : 0.0;
}

}  // namespace detail

/// Mini-batch SGD with momentum on binary cross-entropy. A stratified
/// validation fraction is held out of (x, y); the callbacks monitor its loss.
/// The returned model carries the weights of the best monitored epoch.
inline MlpFit fit_mlp(const FeatureMatrix& x, const LabelVector& y, const MlpHyper& hyper,
                      const MlpCallbacks& callbacks, std::uint64_t seed) {
  check_xy(x, y);
  require(hyper.batch_size >= 2, ErrorCode::BatchTooSmall, "batch size must be at least 2");
  require(hyper.dropout >= 0.0 && hyper.dropout < 1.0, ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  require(hyper.learning_rate > 0.0, ErrorCode::InvalidArgument, "learning rate must be positive");

  std::vector<std::size_t> train_rows(x.rows()), val_rows;
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  if (hyper.validation_fraction > 0.0) {
    const auto split = stratified_split(y, hyper.validation_fraction, derive_seed(seed, 1));
    train_rows = split.train_rows;
    val_rows = split.test_rows;
  }
  require(train_rows.size() >= 2, ErrorCode::BatchTooSmall, "need at least 2 training rows");

  const MatrixXd all = to_eigen(x);
  const bool has_val = !val_rows.empty();
  MatrixXd x_val;
  VectorXd y_val;
  if (has_val) {
    x_val.resize(static_cast<Eigen::Index>(val_rows.size()), all.cols());
    for (std::size_t i = 0; i < val_rows.size(); ++i)
      x_val.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(val_rows[i]));
    y_val = detail::label_vector(y, val_rows);
  }

  MlpFit fit{init_mlp(x.cols(), hyper, derive_seed(seed, 2)), {}};
  detail::Momentum velocity(fit.model);
  std::optional<EarlyStopping<MlpModel>> stopper;
  if (callbacks.early_stopping) stopper.emplace(*callbacks.early_stopping);
  std::optional<ReduceLrOnPlateau> plateau;
  if (callbacks.plateau) plateau.emplace(hyper.learning_rate, *callbacks.plateau);
  double lr = hyper.learning_rate;

  // Last batch is merged into its predecessor when it would hold one row.
  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t start = 0; start < train_rows.size(); start += hyper.batch_size)
    batches.emplace_back(start, std::min(train_rows.size(), start + hyper.batch_size));
  if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
    batches[batches.size() - 2].second = batches.back().second;
    batches.pop_back();
  }

  const std::uint64_t dropout_seed = derive_seed(seed, 3);
  for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    Rng order_rng(derive_seed(derive_seed(seed, 4), epoch));
    std::vector<std::size_t> order = train_rows;
    order_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0, hit_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto [begin, end] = batches[b];
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      MatrixXd xb(static_cast<Eigen::Index>(rows.size()), all.cols());
      for (std::size_t i = 0; i < rows.size(); ++i)
        xb.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(rows[i]));
      const VectorXd yb = detail::label_vector(y, rows);

      const auto step_seed = derive_seed(dropout_seed, epoch * batches.size() + b);
      auto cache = forward_pass(fit.model, xb, MlpMode::Train, step_seed, fit.model.dropout);
      const double batch_loss = mean_bce(cache.logits, yb);
      if (!std::isfinite(batch_loss))
        fail(ErrorCode::NonFiniteLoss, "MLP loss diverged in epoch " + std::to_string(epoch));
      update_running_stats(fit.model, cache);
      const auto grads = mlp_backward(fit.model, cache, yb);
      if (!detail::all_finite(grads))
        fail(ErrorCode::NonFiniteLoss, "MLP gradients diverged in epoch " + std::to_string(epoch));
      detail::sgd_step(fit.model, velocity, grads, lr, hyper.momentum);
      loss_sum += batch_loss * static_cast<double>(rows.size());
      hit_sum += detail::accuracy_of(cache.logits, yb) * static_cast<double>(rows.size());
    }

    HistoryRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_rows.size());
    rec.train_acc = hit_sum / static_cast<double>(train_rows.size());
    rec.lr = lr;
    if (has_val) {
      const auto vc = forward_pass(fit.model, x_val, MlpMode::Infer, 0, 0.0);
      rec.val_loss = mean_bce(vc.logits, y_val);
      rec.val_acc = detail::accuracy_of(vc.logits, y_val);
    } else {
      rec.val_loss = rec.train_loss;
      rec.val_acc = rec.train_acc;
    }
    if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss))
      fail(ErrorCode::NonFiniteLoss, "MLP loss diverged in epoch " + std::to_string(epoch));
    fit.history.records.push_back(rec);

    if (stopper && stopper->step(epoch, rec.val_loss, fit.model)) {
      fit.history.stopped_early = true;
      break;
    }
    if (plateau) lr = plateau->step(epoch, rec.val_loss);
  }
  if (stopper && stopper->has_best()) {
    fit.model = stopper->best();
    fit.history.best_epoch = stopper->best_epoch();
  } else if (!fit.history.records.empty()) {
    fit.history.best_epoch = fit.history.records.back().epoch;
  }
  return fit;
}

inline MlpFit fit_mlp(const FeatureMatrix& x, const LabelVector& y, const MlpHyper& hyper, std::uint64_t seed) {
  return fit_mlp(x, y, hyper, hyper.callbacks, seed);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json matrix_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, ErrorCode::DimensionMismatch, "matrix payload size");
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

inline std::vector<double> row_values(const RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline RowVectorXd row_from_json(const nlohmann::json& j) {
  const auto data = j.get<std::vector<double>>();
  RowVectorXd v(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v(static_cast<Eigen::Index>(i)) = data[i];
  return v;
}

}  // namespace detail

inline nlohmann::json MlpModel::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : hidden)
    layers.push_back({{"weight", detail::matrix_json(l.weight)},
                      {"bias", detail::row_values(l.bias)},
                      {"gamma", detail::row_values(l.gamma)},
                      {"beta", detail::row_values(l.beta)},
                      {"running_mean", detail::row_values(l.running_mean)},
                      {"running_var", detail::row_values(l.running_var)}});
  return {{"kind", kKind},
          {"input_width", input_width},
          {"dropout", dropout},
          {"bn_epsilon", bn_epsilon},
          {"bn_momentum", bn_momentum},
          {"hidden", layers},
          {"out_weight", std::vector<double>(out_weight.data(), out_weight.data() + out_weight.size())},
          {"out_bias", out_bias}};
}

inline MlpModel MlpModel::from_json(const nlohmann::json& j) {
  MlpModel m;
  m.input_width = j.at("input_width").get<std::size_t>();
  m.dropout = j.at("dropout").get<double>();
  m.bn_epsilon = j.at("bn_epsilon").get<double>();
  m.bn_momentum = j.at("bn_momentum").get<double>();
  for (const auto& l : j.at("hidden"))
    m.hidden.push_back({detail::matrix_from_json(l.at("weight")), detail::row_from_json(l.at("bias")),
                        detail::row_from_json(l.at("gamma")), detail::row_from_json(l.at("beta")),
                        detail::row_from_json(l.at("running_mean")), detail::row_from_json(l.at("running_var"))});
  const auto w = j.at("out_weight").get<std::vector<double>>();
  m.out_weight = Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.out_bias = j.at("out_bias").get<double>();
  return m;
}

/// Classifier adapter that also keeps the training history of the last fit.
class MlpClassifier final : public Classifier {
 public:
  explicit MlpClassifier(MlpHyper hyper = {}) : hyper_(std::move(hyper)) {}
  explicit MlpClassifier(MlpModel model) : model_(std::move(model)) {}

  std::string kind() const override { return std::string(MlpModel::kKind); }
  void fit(const FeatureMatrix& x, const LabelVector& y, std::uint64_t seed) override {
    auto result = fit_mlp(x, y, hyper_, seed);
    model_ = std::move(result.model);
    history_ = std::move(result.history);
  }
  bool fitted() const override { return model_.has_value(); }
  std::size_t n_features() const override { return model_ ? model_->n_features() : 0; }
  nlohmann::json to_json() const override {
    require(fitted(), ErrorCode::InvalidArgument, "serialising an unfitted model");
    return model_->to_json();
  }

  const MlpModel& model() const { return *model_; }
  const MlpHyper& hyper() const { return hyper_; }
  const TrainingHistory& history() const { return history_; }

 protected:
  std::vector<double> compute_proba(const FeatureMatrix& x) const override { return model_->predict_proba(x); }

 private:
  MlpHyper hyper_;
  std::optional<MlpModel> model_;
  TrainingHistory history_;
};

}  // namespace voteml
