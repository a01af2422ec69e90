#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voteml/error.hpp"
#include "voteml/matrix.hpp"
#include "voteml/random.hpp"

namespace voteml {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Indices of the k rows of `points` closest to row `query` (excluding the
/// query itself), nearest first. Equal distances go to the lower index.
inline std::vector<std::size_t> knn_minority(const FeatureMatrix& points, std::size_t query, std::size_t k) {
  require(query < points.rows(), ErrorCode::InvalidArgument, "query index out of range");
  require(k >= 1 && points.rows() >= k + 1, ErrorCode::InvalidArgument,
          "need at least k+1 points for k neighbours");
  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(points.rows() - 1);
  const auto q = points.row(query);
  for (std::size_t i = 0; i < points.rows(); ++i)
    if (i != query) candidates.emplace_back(squared_distance(q, points.row(i)), i);
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                    candidates.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = candidates[i].second;
  return out;
}

struct SmoteOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  // Test hook: use this interpolation weight instead of drawing one.
  std::optional<double> fixed_lambda;
};

/// Where a synthetic row came from, in indices of the input matrix.
struct SyntheticOrigin {
  std::size_t base = 0;
  std::size_t neighbor = 0;
  double lambda = 0.0;
};

struct SmoteResult {
  FeatureMatrix features;
  LabelVector labels;
  std::vector<SyntheticOrigin> origins;  // one per appended synthetic row
  std::size_t k_used = 0;
  std::vector<std::string> warnings;
};

/// Balances a binary training set by interpolating new minority rows.
///
/// Originals are kept verbatim as a prefix of the output; synthetic rows are
/// appended. Synthetic row j takes minority point j mod n_minority as its
/// base and draws the neighbour and the weight from its own derived stream,
/// so the output does not depend on evaluation order.
inline SmoteResult smote_oversample(const FeatureMatrix& features, const LabelVector& labels,
                                    const SmoteOptions& options) {
  check_xy(features, labels);
  require(options.k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");

  std::size_t ones = 0;
  for (auto v : labels) ones += v;
  const std::size_t zeros = labels.size() - ones;

  SmoteResult result{features, labels, {}, 0, {}};
  if (ones == zeros) return result;

  const std::uint8_t minority_label = ones < zeros ? 1 : 0;
  std::vector<std::size_t> minority_rows;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == minority_label) minority_rows.push_back(i);
  const std::size_t n_min = minority_rows.size();
  const std::size_t n_maj = labels.size() - n_min;
  if (n_min < 2)
    fail(ErrorCode::TooFewMinority, "minority class has " + std::to_string(n_min) + " rows");

  std::size_t k = options.k;
  if (k > n_min - 1) {
    result.warnings.push_back("k=" + std::to_string(k) + " clamped to " + std::to_string(n_min - 1) +
                              " (minority count " + std::to_string(n_min) + ")");
    k = n_min - 1;
  }
  result.k_used = k;

  const FeatureMatrix minority = features.select_rows(minority_rows);
  std::vector<std::vector<std::size_t>> neighbours(n_min);
  for (std::size_t i = 0; i < n_min; ++i) neighbours[i] = knn_minority(minority, i, k);

  const std::size_t n_new = n_maj - n_min;
  std::vector<double> synth(features.cols());
  for (std::size_t j = 0; j < n_new; ++j) {
    Rng rng(derive_seed(options.seed, j));
    const std::size_t base = j % n_min;
    const std::size_t nb = neighbours[base][rng.below(k)];
    const double lambda = options.fixed_lambda ? *options.fixed_lambda : rng.uniform_closed();
    const auto xb = minority.row(base);
    const auto xn = minority.row(nb);
    for (std::size_t c = 0; c < synth.size(); ++c) synth[c] = xb[c] + lambda * (xn[c] - xb[c]);
    result.features.append_row(synth);
    result.labels.push_back(minority_label);
    result.origins.push_back({minority_rows[base], minority_rows[nb], lambda});
  }
  return result;
}

}  // namespace voteml
