#pragma once

// Stand-in dataset with the survey's seven categorical features and a
// planted, noisy disjunctive rule. Labels are drawn first with exact class
// counts; a clean rule value z equals the label except with probability
// `noise`; features are then sampled uniformly among the assignments whose
// rule value is z. The best achievable accuracy therefore has a closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/error.hpp"
#include "voteml/random.hpp"
#include "voteml/table.hpp"

namespace voteml {

struct RuleTerm {
  std::size_t feature = 0;
  std::size_t category = 0;

  friend bool operator==(const RuleTerm&, const RuleTerm&) = default;
};

struct SyntheticSpec {
  std::size_t n_rows = 2000;
  double imbalance = 4.0;  // negatives per positive
  double noise = 0.05;
  std::vector<std::size_t> categories{6, 5, 4, 3, 4, 5, 3};
  std::size_t rule_size = 2;    // used when `rule` is empty
  std::vector<RuleTerm> rule;   // explicit rule; drawn from the seed when empty
};

struct SyntheticData {
  Table table;
  std::vector<RuleTerm> rule;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double bayes_accuracy = 0.0;
};

inline std::string category_name(std::size_t k) {
  return k < 10 ? "v0" + std::to_string(k) : "v" + std::to_string(k);
}

/// sum over z of max_y P(y, z), with P(y=1) = positives / n.
inline double bayes_accuracy(std::size_t positives, std::size_t n, double noise) {
  if (n == 0) return 1.0;
  const double p1 = static_cast<double>(positives) / static_cast<double>(n), p0 = 1.0 - p1;
  const double keep = 1.0 - noise;
  return std::max(p1 * keep, p0 * noise) + std::max(p0 * keep, p1 * noise);
}

inline void validate_spec(const SyntheticSpec& spec) {
  const Schema schema = disaster_survey_schema();
  const auto d = schema.feature_names().size();
  if (spec.n_rows < 2) fail(ErrorCode::Config, "synthetic n_rows must be at least 2");
  if (!(spec.imbalance > 0.0) || !std::isfinite(spec.imbalance)) fail(ErrorCode::Config, "imbalance must be positive");
  if (!(spec.noise >= 0.0 && spec.noise < 0.5)) fail(ErrorCode::Config, "noise must lie in [0, 0.5)");
  if (spec.categories.size() != d)
    fail(ErrorCode::Config, "need one category count per feature (" + std::to_string(d) + ")");
  for (auto c : spec.categories)
    if (c < 2) fail(ErrorCode::Config, "every feature needs at least 2 categories");
  const auto size = spec.rule.empty() ? spec.rule_size : spec.rule.size();
  if (size < 1 || size > 3) fail(ErrorCode::Config, "the planted rule uses 1 to 3 features");
  std::vector<bool> used(d, false);
  for (const auto& t : spec.rule) {
    if (t.feature >= d || t.category >= spec.categories[t.feature] || used[t.feature])
      fail(ErrorCode::Config, "invalid planted rule term");
    used[t.feature] = true;
  }
}

inline bool rule_holds(const std::vector<RuleTerm>& rule, const std::vector<std::size_t>& row) {
  for (const auto& t : rule)
    if (row[t.feature] == t.category) return true;
  return false;
}

inline SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  const Schema schema = disaster_survey_schema();
  const auto d = spec.categories.size();

  SyntheticData out;
  out.rule = spec.rule;
  if (out.rule.empty()) {
    Rng rule_rng(derive_seed(seed, 0));
    std::vector<std::size_t> features(d);
    for (std::size_t i = 0; i < d; ++i) features[i] = i;
    rule_rng.shuffle(std::span<std::size_t>(features));
    features.resize(spec.rule_size);
    std::sort(features.begin(), features.end());
    for (auto f : features) out.rule.push_back({f, static_cast<std::size_t>(rule_rng.below(spec.categories[f]))});
  }

  const auto n = spec.n_rows;
  out.positives = static_cast<std::size_t>(std::llround(static_cast<double>(n) / (spec.imbalance + 1.0)));
  out.positives = std::clamp<std::size_t>(out.positives, 1, n - 1);
  out.negatives = n - out.positives;
  out.bayes_accuracy = bayes_accuracy(out.positives, n, spec.noise);

  std::vector<std::uint8_t> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(out.positives), 1);
  Rng rng(derive_seed(seed, 1));
  rng.shuffle(std::span<std::uint8_t>(labels));

  out.table.schema = schema;
  out.table.columns.assign(schema.size(), std::vector<Cell>(n));
  const auto feature_names = schema.feature_names();
  std::vector<std::size_t> feature_col(d);
  for (std::size_t f = 0; f < d; ++f) feature_col[f] = *schema.find(feature_names[f]);
  const auto& target = schema.target();

  std::vector<std::size_t> row(d);
  for (std::size_t r = 0; r < n; ++r) {
    const bool z = rng.bernoulli(spec.noise) ? !labels[r] : static_cast<bool>(labels[r]);
    // Rejection sampling from the uniform grid restricted to rule value z.
    // With z = 0 the rule features simply avoid their planted category.
    for (;;) {
      for (std::size_t f = 0; f < d; ++f) row[f] = static_cast<std::size_t>(rng.below(spec.categories[f]));
      if (rule_holds(out.rule, row) == z) break;
    }
    for (std::size_t f = 0; f < d; ++f) out.table.columns[feature_col[f]][r] = category_name(row[f]);
    out.table.columns[schema.target_index()][r] = labels[r] ? target.positive_label : target.negative_label;
  }
  return out;
}

inline nlohmann::json spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json rule = nlohmann::json::array();
  for (const auto& t : spec.rule) rule.push_back({{"feature", t.feature}, {"category", t.category}});
  return {{"n_rows", spec.n_rows},       {"imbalance", spec.imbalance}, {"noise", spec.noise},
          {"categories", spec.categories}, {"rule_size", spec.rule_size}, {"rule", rule}};
}

inline SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    for (const auto& [key, value] : j.items())
      if (key != "n_rows" && key != "imbalance" && key != "noise" && key != "categories" && key != "rule_size" &&
          key != "rule")
        fail(ErrorCode::Config, "unknown synthetic field '" + key + "'");
    s.n_rows = j.value("n_rows", s.n_rows);
    s.imbalance = j.value("imbalance", s.imbalance);
    s.noise = j.value("noise", s.noise);
    s.categories = j.value("categories", s.categories);
    s.rule_size = j.value("rule_size", s.rule_size);
    if (j.contains("rule"))
      for (const auto& t : j.at("rule"))
        s.rule.push_back({t.at("feature").get<std::size_t>(), t.at("category").get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, std::string("synthetic spec: ") + e.what());
  }
  validate_spec(s);
  return s;
}

/// Sidecar description: the rule by column name and category, and the
/// closed-form best accuracy.
inline nlohmann::json sidecar_json(const SyntheticSpec& spec, const SyntheticData& data, std::uint64_t seed) {
  const auto names = data.table.schema.feature_names();
  nlohmann::json rule = nlohmann::json::array();
  for (const auto& t : data.rule)
    rule.push_back({{"feature", t.feature}, {"column", names[t.feature]}, {"category", category_name(t.category)}});
  return {{"seed", seed},
          {"spec", spec_to_json(spec)},
          {"rule", {{"type", "any-of"}, {"terms", rule}}},
          {"positives", data.positives},
          {"negatives", data.negatives},
          {"bayes_accuracy", data.bayes_accuracy}};
}

}  // namespace voteml
