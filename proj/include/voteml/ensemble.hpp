#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/learners/classifier.hpp"
#include "voteml/learners/registry.hpp"

namespace voteml {

struct MemberConfig {
  std::string name;  // display name; defaults to the kind
  std::string kind;
  nlohmann::json params;
};

/// Named compositions. ensemble3 = MLP, forest, boosted trees;
/// ensemble6 adds the linear models and the second boosting preset.
inline std::vector<MemberConfig> ensemble_preset(const std::string& name) {
  if (name == "ensemble3") return {{"mlp", "mlp", {}}, {"forest", "forest", {}}, {"gbt_xgb", "gbt_xgb", {}}};
  if (name == "ensemble6")
    return {{"logreg", "logreg", {}},     {"svm", "svm", {}},          {"forest", "forest", {}},
            {"gbt_xgb", "gbt_xgb", {}},   {"gbt_lgbm", "gbt_lgbm", {}}, {"mlp", "mlp", {}}};
  fail(ErrorCode::Config, "unknown ensemble preset '" + name + "' (expected ensemble3 or ensemble6)");
}

/// Soft-voting combination of fitted members.
class VotingEnsemble {
 public:
  VotingEnsemble(std::vector<std::shared_ptr<const Classifier>> members, std::vector<double> weights = {},
                 std::vector<std::string> names = {})
      : members_(std::move(members)), weights_(std::move(weights)), names_(std::move(names)) {
    require(members_.size() >= 2, ErrorCode::EmptyEnsemble,
            "a voting ensemble needs at least 2 members, got " + std::to_string(members_.size()));
    for (const auto& m : members_) require(m && m->fitted(), ErrorCode::InvalidArgument, "ensemble member is not fitted");
    if (weights_.empty()) weights_.assign(members_.size(), 1.0);
    require(weights_.size() == members_.size(), ErrorCode::LengthMismatch,
            std::to_string(weights_.size()) + " weights for " + std::to_string(members_.size()) + " members");
    for (double w : weights_)
      require(std::isfinite(w) && w >= 0.0, ErrorCode::InvalidArgument, "ensemble weights must be finite and non-negative");
    // Sorted summation keeps the normalised weights independent of member order.
    auto sorted = weights_;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double w : sorted) total += w;
    require(total > 0.0, ErrorCode::InvalidArgument, "ensemble weights sum to zero");
    for (double& w : weights_) w /= total;
    if (names_.empty())
      for (const auto& m : members_) names_.push_back(m->kind());
    require(names_.size() == members_.size(), ErrorCode::LengthMismatch, "one name per member");
    const auto d = members_.front()->n_features();
    for (const auto& m : members_)
      require(m->n_features() == d, ErrorCode::DimensionMismatch, "ensemble members disagree on feature count");
  }

  std::size_t size() const { return members_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::string>& names() const { return names_; }
  const Classifier& member(std::size_t i) const { return *members_[i]; }
  std::size_t n_features() const { return members_.front()->n_features(); }

  /// Per-member probabilities, one vector per member.
  std::vector<std::vector<double>> member_probabilities(const FeatureMatrix& x) const {
    std::vector<std::vector<double>> out;
    for (const auto& m : members_) out.push_back(m->predict_proba(x));
    return out;
  }

  std::vector<double> soft_vote(const FeatureMatrix& x) const { return combine(member_probabilities(x)); }

  /// Weighted mean of member probabilities. The terms are summed in sorted
  /// order so the result does not depend on member order, and clamped into
  /// the range of the contributing members so rounding cannot leave it.
  std::vector<double> combine(const std::vector<std::vector<double>>& probs) const {
    require(probs.size() == members_.size(), ErrorCode::LengthMismatch, "one probability vector per member");
    const std::size_t n = probs.front().size();
    std::vector<double> out(n);
    std::vector<double> terms(members_.size());
    for (std::size_t r = 0; r < n; ++r) {
      double lo = 1.0, hi = 0.0;
      for (std::size_t i = 0; i < members_.size(); ++i) {
        const double p = probs[i][r];
        terms[i] = weights_[i] * p;
        if (weights_[i] > 0.0) {
          lo = std::min(lo, p);
          hi = std::max(hi, p);
        }
      }
      std::sort(terms.begin(), terms.end());
      double s = 0.0;
      for (double t : terms) s += t;
      out[r] = std::clamp(s, lo, hi);
    }
    return out;
  }

  /// Manifest referencing member model files by relative path.
  nlohmann::json manifest(const std::vector<std::string>& files, const std::string& preset = {}) const {
    nlohmann::json members = nlohmann::json::array();
    for (std::size_t i = 0; i < members_.size(); ++i)
      members.push_back(
          {{"name", names_[i]}, {"kind", members_[i]->kind()}, {"file", files.at(i)}, {"weight", weights_[i]}});
    nlohmann::json j{{"kind", "soft-voting"}, {"format_version", kModelFormatVersion}, {"members", members}};
    if (!preset.empty()) j["preset"] = preset;
    return j;
  }

 private:
  std::vector<std::shared_ptr<const Classifier>> members_;
  std::vector<double> weights_;
  std::vector<std::string> names_;
};

inline std::vector<double> soft_vote(const VotingEnsemble& ensemble, const FeatureMatrix& x) {
  return ensemble.soft_vote(x);
}

/// Member i is fitted with seed derive_seed(seed, i) on the same data.
inline VotingEnsemble fit_ensemble(const FeatureMatrix& x, const LabelVector& y,
                                   const std::vector<MemberConfig>& configs, std::uint64_t seed,
                                   std::vector<double> weights = {}) {
  require(configs.size() >= 2, ErrorCode::EmptyEnsemble,
          "a voting ensemble needs at least 2 members, got " + std::to_string(configs.size()));
  std::vector<std::shared_ptr<const Classifier>> members;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto model = make_classifier(configs[i].kind, configs[i].params);
    model->fit(x, y, derive_seed(seed, i));
    members.push_back(std::move(model));
    names.push_back(configs[i].name.empty() ? configs[i].kind : configs[i].name);
  }
  return VotingEnsemble(std::move(members), std::move(weights), std::move(names));
}

}  // namespace voteml
