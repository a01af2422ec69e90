#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "voteml/csv.hpp"
#include "voteml/error.hpp"
#include "voteml/random.hpp"

namespace voteml {

struct EarlyStopConfig {
  std::size_t patience = 10;
  double min_delta = 1e-4;
};

/// Stops once the monitored loss has failed to beat best - min_delta for
/// `patience` consecutive epochs, and keeps a copy of the best state seen.
template <class Snapshot>
class EarlyStopping {
 public:
  explicit EarlyStopping(EarlyStopConfig config = {}) : config_(config) {}

  /// Returns true when training should stop; best() then holds the state to restore.
  bool step(std::size_t epoch, double loss, const Snapshot& current) {
    require(std::isfinite(loss), ErrorCode::NonFiniteLoss, "monitored loss is not finite");
    if (loss < best_loss_ - config_.min_delta) {
      best_loss_ = loss;
      best_epoch_ = epoch;
      best_ = current;
      since_improve_ = 0;
      return false;
    }
    ++since_improve_;
    return since_improve_ >= config_.patience;
  }

  bool has_best() const { return best_.has_value(); }
  const Snapshot& best() const { return *best_; }
  double best_loss() const { return best_loss_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_since_improve() const { return since_improve_; }
  const EarlyStopConfig& config() const { return config_; }

 private:
  EarlyStopConfig config_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t since_improve_ = 0;
  std::optional<Snapshot> best_;
};

struct PlateauConfig {
  double factor = 0.5;
  std::size_t patience = 5;
  double min_lr = 1e-6;
  double min_delta = 1e-4;
};

/// Multiplies the learning rate by `factor` (floored at min_lr) after
/// `patience` consecutive epochs without improvement.
class ReduceLrOnPlateau {
 public:
  ReduceLrOnPlateau(double initial_lr, PlateauConfig config = {}) : config_(config), lr_(initial_lr) {
    require(initial_lr > 0, ErrorCode::InvalidArgument, "learning rate must be positive");
    require(config.factor > 0 && config.factor < 1, ErrorCode::InvalidArgument, "factor must lie in (0, 1)");
    lr_ = std::max(lr_, config_.min_lr);
  }

  double step(std::size_t /*epoch*/, double loss) {
    require(std::isfinite(loss), ErrorCode::NonFiniteLoss, "monitored loss is not finite");
    if (loss < best_ - config_.min_delta) {
      best_ = loss;
      since_improve_ = 0;
      return lr_;
    }
    if (++since_improve_ >= config_.patience) {
      lr_ = std::max(lr_ * config_.factor, config_.min_lr);
      since_improve_ = 0;
    }
    return lr_;
  }

  double current_lr() const { return lr_; }
  std::size_t epochs_since_improve() const { return since_improve_; }

 private:
  PlateauConfig config_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t since_improve_ = 0;
};

// ---------------------------------------------------------------------------
// Random hyperparameter search

struct SearchSpace {
  std::vector<std::size_t> widths{64, 128, 256, 512, 1024};
  std::vector<double> dropouts{0.2, 0.3, 0.5};
  std::vector<double> learning_rates{1e-2, 1e-3, 1e-4};
  std::size_t n_layers = 4;

  std::uint64_t size() const {
    std::uint64_t n = dropouts.size() * learning_rates.size();
    for (std::size_t l = 0; l < n_layers; ++l) n *= widths.size();
    return n;
  }
};

struct TrialConfig {
  std::vector<std::size_t> units;
  double dropout = 0.0;
  double learning_rate = 0.0;

  friend bool operator==(const TrialConfig&, const TrialConfig&) = default;
};

/// Mixed-radix decoding of a point index: units (layer 0 fastest), then
/// dropout, then learning rate.
inline TrialConfig decode_point(const SearchSpace& space, std::uint64_t index) {
  TrialConfig c;
  for (std::size_t l = 0; l < space.n_layers; ++l) {
    c.units.push_back(space.widths[index % space.widths.size()]);
    index /= space.widths.size();
  }
  c.dropout = space.dropouts[index % space.dropouts.size()];
  index /= space.dropouts.size();
  c.learning_rate = space.learning_rates[index % space.learning_rates.size()];
  return c;
}

struct TrialRecord {
  std::size_t trial = 0;
  TrialConfig config;
  double score = 0.0;
  bool ok = false;
  std::string message;
};

struct SearchResult {
  TrialConfig best;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_trial = 0;
  std::vector<TrialRecord> trials;  // ordered by trial index
};

/// Draws points uniformly with replacement, skipping repeats, until n_trials
/// distinct points are drawn or the space runs out; when n_trials covers
/// the whole space every point is visited in a seeded random order. The
/// winner is the highest score, earliest trial on ties. A trial that throws
/// is logged and skipped.
inline SearchResult random_search(const SearchSpace& space, std::size_t n_trials, std::uint64_t seed,
                                  const std::function<double(const TrialConfig&)>& evaluate) {
  require(n_trials >= 1, ErrorCode::InvalidArgument, "n_trials must be at least 1");
  require(!space.widths.empty() && !space.dropouts.empty() && !space.learning_rates.empty(),
          ErrorCode::InvalidArgument, "search space lists must be non-empty");
  for (double d : space.dropouts)
    require(d >= 0.0 && d < 1.0, ErrorCode::InvalidArgument, "dropout rates must lie in [0, 1)");
  for (double lr : space.learning_rates) require(lr > 0.0, ErrorCode::InvalidArgument, "learning rates must be positive");

  const std::uint64_t size = space.size();
  Rng rng(seed);
  std::vector<std::uint64_t> order;
  if (n_trials >= size) {
    order.resize(size);
    for (std::uint64_t i = 0; i < size; ++i) order[i] = i;
    rng.shuffle(std::span<std::uint64_t>(order));
  } else {
    std::set<std::uint64_t> seen;
    while (order.size() < n_trials) {
      const auto idx = rng.below(size);
      if (seen.insert(idx).second) order.push_back(idx);
    }
  }

  SearchResult result;
  std::exception_ptr first_failure;
  for (std::size_t t = 0; t < order.size(); ++t) {
    TrialRecord rec{t, decode_point(space, order[t]), 0.0, false, {}};
    try {
      rec.score = evaluate(rec.config);
      rec.ok = std::isfinite(rec.score);
      if (!rec.ok) rec.message = "non-finite score";
    } catch (const std::exception& e) {
      rec.message = e.what();
      if (!first_failure) first_failure = std::current_exception();
    }
    if (rec.ok && rec.score > result.best_score) {
      result.best = rec.config;
      result.best_score = rec.score;
      result.best_trial = t;
    }
    result.trials.push_back(std::move(rec));
  }
  if (!std::isfinite(result.best_score)) {
    if (first_failure) std::rethrow_exception(first_failure);
    fail(ErrorCode::NonFiniteLoss, "no trial produced a finite score");
  }
  return result;
}

inline std::string trials_csv(const SearchResult& result, std::size_t n_layers) {
  std::vector<std::string> header{"trial"};
  for (std::size_t l = 0; l < n_layers; ++l) header.push_back("units" + std::to_string(l + 1));
  for (const char* h : {"dropout", "lr", "val_score", "status"}) header.emplace_back(h);
  std::string out = csv::join(header) + "\n";
  for (const auto& t : result.trials) {
    std::vector<std::string> row{std::to_string(t.trial)};
    for (auto u : t.config.units) row.push_back(std::to_string(u));
    row.push_back(csv::format_number(t.config.dropout));
    row.push_back(csv::format_number(t.config.learning_rate));
    row.push_back(t.ok ? csv::format_number(t.score) : std::string{});
    row.push_back(t.ok ? "ok" : "failed");
    out += csv::join(row) + "\n";
  }
  return out;
}

}  // namespace voteml
