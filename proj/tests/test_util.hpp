#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "voteml/matrix.hpp"
#include "voteml/random.hpp"

namespace testutil {

namespace fs = std::filesystem;

/// Fresh, empty directory under the build tree's temp area.
inline fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("voteml_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Two Gaussian-ish blobs centred at -shift and +shift in every coordinate.
inline void blobs(std::size_t n, std::size_t d, double shift, std::uint64_t seed, voteml::FeatureMatrix& x,
                  voteml::LabelVector& y) {
  voteml::Rng rng(seed);
  x = voteml::FeatureMatrix(n, d);
  y.assign(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    y[r] = r % 2;
    const double centre = y[r] ? shift : -shift;
    for (std::size_t c = 0; c < d; ++c) {
      double g = 0.0;
      for (int k = 0; k < 12; ++k) g += rng.uniform();
      x(r, c) = centre + (g - 6.0) * 0.5;
    }
  }
}

inline voteml::FeatureMatrix random_matrix(std::size_t n, std::size_t d, double scale, voteml::Rng& rng) {
  voteml::FeatureMatrix x(n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) x(r, c) = rng.uniform(-scale, scale);
  return x;
}

inline voteml::LabelVector random_labels(std::size_t n, voteml::Rng& rng) {
  voteml::LabelVector y(n);
  for (auto& v : y) v = static_cast<std::uint8_t>(rng.below(2));
  return y;
}

}  // namespace testutil
