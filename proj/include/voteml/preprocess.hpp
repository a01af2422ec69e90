#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "voteml/error.hpp"
#include "voteml/matrix.hpp"
#include "voteml/random.hpp"
#include "voteml/table.hpp"

namespace voteml {

// ---------------------------------------------------------------------------
// Mode imputation

struct ImputerState {
  std::map<std::string, std::string> modes;  // column name -> modal category

  friend bool operator==(const ImputerState&, const ImputerState&) = default;
};

/// Most frequent non-missing category; ties go to the lexicographically
/// smallest category.
inline std::string column_mode(const std::vector<Cell>& column, const std::string& name) {
  std::map<std::string, std::size_t> counts;
  for (const auto& cell : column)
    if (cell) ++counts[*cell];
  if (counts.empty()) fail(ErrorCode::AllMissingColumn, name);
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

inline ImputerState fit_imputer(const Table& table, const std::vector<std::string>& feature_columns) {
  ImputerState state;
  for (const auto& name : feature_columns) state.modes[name] = column_mode(table.column(name), name);
  return state;
}

inline Table apply_imputer(const ImputerState& state, const Table& table) {
  Table out = table;
  for (std::size_t c = 0; c < out.schema.size(); ++c) {
    const auto& col = out.schema.columns()[c];
    if (col.kind != ColumnKind::Categorical) continue;
    const auto it = state.modes.find(col.name);
    if (it == state.modes.end()) fail(ErrorCode::UnknownColumn, "no imputer mode for " + col.name);
    for (auto& cell : out.columns[c])
      if (!cell) cell = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label encoding

/// Bijection between category text and codes 0..k-1, codes assigned in
/// lexicographic order of the category text.
class LabelEncoder {
 public:
  LabelEncoder() = default;

  static LabelEncoder fit(const std::vector<Cell>& column) {
    std::vector<std::string> cats;
    for (const auto& cell : column) {
      require(cell.has_value(), ErrorCode::InvalidArgument, "encoder fitted on a missing cell");
      cats.push_back(*cell);
    }
    return from_categories(std::move(cats));
  }

  static LabelEncoder from_categories(std::vector<std::string> categories) {
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
    LabelEncoder enc;
    enc.categories_ = std::move(categories);
    for (std::size_t i = 0; i < enc.categories_.size(); ++i) enc.codes_.emplace(enc.categories_[i], i);
    return enc;
  }

  std::size_t code(const std::string& category) const {
    const auto it = codes_.find(category);
    if (it == codes_.end()) fail(ErrorCode::UnseenCategory, "'" + category + "'");
    return it->second;
  }

  std::vector<std::size_t> encode(const std::vector<Cell>& column) const {
    std::vector<std::size_t> out;
    out.reserve(column.size());
    for (const auto& cell : column) {
      require(cell.has_value(), ErrorCode::InvalidArgument, "cannot encode a missing cell");
      out.push_back(code(*cell));
    }
    return out;
  }

  const std::string& category(std::size_t code) const { return categories_.at(code); }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }

  friend bool operator==(const LabelEncoder& a, const LabelEncoder& b) {
    return a.categories_ == b.categories_;
  }

 private:
  std::vector<std::string> categories_;
  std::map<std::string, std::size_t> codes_;
};

inline LabelEncoder fit_encoder(const std::vector<Cell>& column) { return LabelEncoder::fit(column); }

inline std::vector<std::size_t> encode(const LabelEncoder& encoder, const std::vector<Cell>& column) {
  return encoder.encode(column);
}

// ---------------------------------------------------------------------------
// Stratified split

struct SplitIndices {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitIndices&, const SplitIndices&) = default;
};

/// Per-class test quotas: floor of n_c * fraction, with the leftover slots of
/// round(n * fraction) handed out by largest fractional remainder (ties to
/// the lower class label).
inline std::array<std::size_t, 2> stratified_quotas(std::size_t n0, std::size_t n1, double test_fraction) {
  const std::size_t n = n0 + n1;
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  const std::array<double, 2> exact{static_cast<double>(n0) * test_fraction,
                                    static_cast<double>(n1) * test_fraction};
  std::array<std::size_t, 2> quota{static_cast<std::size_t>(std::floor(exact[0])),
                                   static_cast<std::size_t>(std::floor(exact[1]))};
  const std::array<std::size_t, 2> caps{n0, n1};
  std::size_t assigned = quota[0] + quota[1];
  while (assigned < total) {
    const double r0 = quota[0] < caps[0] ? exact[0] - static_cast<double>(quota[0]) : -1.0;
    const double r1 = quota[1] < caps[1] ? exact[1] - static_cast<double>(quota[1]) : -1.0;
    if (r0 < 0 && r1 < 0) break;
    ++quota[r1 > r0 ? 1 : 0];
    ++assigned;
  }
  return quota;
}

inline SplitIndices stratified_split(const LabelVector& labels, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::InvalidArgument,
          "test fraction must lie in (0, 1)");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] <= 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
    members[labels[i]].push_back(i);
  }
  require(!members[0].empty() && !members[1].empty(), ErrorCode::DegenerateSplit,
          "both classes need at least one member");

  const auto quota = stratified_quotas(members[0].size(), members[1].size(), test_fraction);
  SplitIndices split;
  split.seed = seed;
  for (std::size_t cls = 0; cls < 2; ++cls) {
    Rng rng(derive_seed(seed, cls));
    auto& rows = members[cls];
    rng.shuffle(std::span<std::size_t>(rows));
    split.test_rows.insert(split.test_rows.end(), rows.begin(), rows.begin() + quota[cls]);
    split.train_rows.insert(split.train_rows.end(), rows.begin() + quota[cls], rows.end());
  }
  std::sort(split.train_rows.begin(), split.train_rows.end());
  std::sort(split.test_rows.begin(), split.test_rows.end());
  if (split.train_rows.empty() || split.test_rows.empty())
    fail(ErrorCode::DegenerateSplit, std::to_string(labels.size()) + " rows at fraction " +
                                         std::to_string(test_fraction));
  return split;
}

// ---------------------------------------------------------------------------
// Standardisation

inline constexpr double kScaleEpsilon = 1e-12;

struct ScalerParams {
  std::vector<double> mean;
  std::vector<double> stddev;  // population standard deviation

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

inline ScalerParams fit_scaler(const FeatureMatrix& features) {
  require(features.rows() > 0, ErrorCode::InvalidArgument, "cannot fit scaler on zero rows");
  const std::size_t d = features.cols();
  const auto n = static_cast<double>(features.rows());
  ScalerParams p{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) p.mean[c] += features(r, c);
  for (auto& m : p.mean) m /= n;
  for (std::size_t r = 0; r < features.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const double dev = features(r, c) - p.mean[c];
      p.stddev[c] += dev * dev;
    }
  for (auto& s : p.stddev) s = std::sqrt(s / n);
  return p;
}

inline FeatureMatrix apply_scaler(const ScalerParams& params, const FeatureMatrix& features) {
  require(params.mean.size() == features.cols(), ErrorCode::DimensionMismatch,
          "scaler fitted on " + std::to_string(params.mean.size()) + " features, got " +
              std::to_string(features.cols()));
  FeatureMatrix out = features;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = (out(r, c) - params.mean[c]) / std::max(params.stddev[c], kScaleEpsilon);
  return out;
}

}  // namespace voteml
