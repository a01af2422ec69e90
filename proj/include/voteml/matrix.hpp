#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voteml/error.hpp"

namespace voteml {

/// Dense row-major grid of reals with named columns.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                std::vector<std::string> names = {})
      : rows_(rows), cols_(cols), values_(std::move(values)), names_(std::move(names)) {
    require(values_.size() == rows_ * cols_, ErrorCode::DimensionMismatch,
            "value count does not match rows x cols");
    require(names_.empty() || names_.size() == cols_, ErrorCode::DimensionMismatch,
            "feature name count does not match column count");
  }

  /// Builds from nested rows; every row must have the same width.
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      require(r.size() == cols, ErrorCode::DimensionMismatch, "ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return FeatureMatrix(rows.size(), cols, std::move(flat));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  void set_feature_names(std::vector<std::string> names) {
    require(names.empty() || names.size() == cols_, ErrorCode::DimensionMismatch,
            "feature name count does not match column count");
    names_ = std::move(names);
  }

  void append_row(std::span<const double> r) {
    if (rows_ == 0 && cols_ == 0) cols_ = r.size();
    require(r.size() == cols_, ErrorCode::DimensionMismatch, "appended row width");
    values_.insert(values_.end(), r.begin(), r.end());
    ++rows_;
  }

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const auto src = row(indices[i]);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    out.names_ = names_;
    return out;
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
};

/// Binary labels; 1 is the positive (PTSD present) class.
using LabelVector = std::vector<std::uint8_t>;

inline LabelVector select_labels(const LabelVector& y, std::span<const std::size_t> indices) {
  LabelVector out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(y[i]);
  return out;
}

inline void check_xy(const FeatureMatrix& x, const LabelVector& y) {
  require(x.rows() == y.size(), ErrorCode::LengthMismatch,
          "feature rows " + std::to_string(x.rows()) + " vs labels " + std::to_string(y.size()));
  for (auto v : y) require(v <= 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
}

}  // namespace voteml
