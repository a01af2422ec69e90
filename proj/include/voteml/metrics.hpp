#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/csv.hpp"
#include "voteml/error.hpp"
#include "voteml/matrix.hpp"

namespace voteml {

/// Class 1 is the positive class.
struct ConfusionMatrix {
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tp = 0;

  std::uint64_t total() const { return tn + fp + fn + tp; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  require(y_true.size() == y_pred.size(), ErrorCode::LengthMismatch,
          std::to_string(y_true.size()) + " true labels vs " + std::to_string(y_pred.size()) + " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    require(y_true[i] <= 1 && y_pred[i] <= 1, ErrorCode::InvalidArgument, "labels must be 0 or 1");
    if (y_true[i])
      (y_pred[i] ? cm.tp : cm.fn)++;
    else
      (y_pred[i] ? cm.fp : cm.tn)++;
  }
  return cm;
}

/// A rate with a zero denominator is reported as 0 and flagged.
struct Rate {
  double value = 0.0;
  bool undefined = false;

  friend bool operator==(const Rate&, const Rate&) = default;
};

inline Rate ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return {0.0, true};
  return {static_cast<double>(num) / static_cast<double>(den), false};
}

inline Rate harmonic_mean(const Rate& p, const Rate& r) {
  if (p.value + r.value == 0.0) return {0.0, true};
  return {2.0 * p.value * r.value / (p.value + r.value), false};
}

struct ClassScores {
  Rate precision;
  Rate recall;
  Rate f1;
  std::uint64_t support = 0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

struct Averages {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const Averages&, const Averages&) = default;
};

enum class Averaging { Macro, Weighted };

inline std::string_view to_string(Averaging a) { return a == Averaging::Macro ? "macro" : "weighted"; }

inline Averaging parse_averaging(std::string_view s) {
  if (s == "macro") return Averaging::Macro;
  if (s == "weighted") return Averaging::Weighted;
  fail(ErrorCode::Config, "averaging must be macro or weighted, got '" + std::string(s) + "'");
}

struct EvaluationReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  bool accuracy_undefined = false;
  std::array<ClassScores, 2> per_class;  // index = class label
  Averages macro;
  Averages weighted;

  const Averages& average(Averaging a) const { return a == Averaging::Macro ? macro : weighted; }
  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

inline EvaluationReport scores(const ConfusionMatrix& cm) {
  EvaluationReport rep;
  rep.confusion = cm;
  const auto acc = ratio(cm.tp + cm.tn, cm.total());
  rep.accuracy = acc.value;
  rep.accuracy_undefined = acc.undefined;

  auto& c1 = rep.per_class[1];
  c1.precision = ratio(cm.tp, cm.tp + cm.fp);
  c1.recall = ratio(cm.tp, cm.tp + cm.fn);
  c1.support = cm.tp + cm.fn;
  auto& c0 = rep.per_class[0];
  c0.precision = ratio(cm.tn, cm.tn + cm.fn);
  c0.recall = ratio(cm.tn, cm.tn + cm.fp);
  c0.support = cm.tn + cm.fp;
  for (auto& c : rep.per_class) c.f1 = harmonic_mean(c.precision, c.recall);

  rep.macro = {(c0.precision.value + c1.precision.value) / 2, (c0.recall.value + c1.recall.value) / 2,
               (c0.f1.value + c1.f1.value) / 2};
  const auto total = static_cast<double>(cm.total());
  if (total > 0) {
    const double w0 = static_cast<double>(c0.support) / total, w1 = static_cast<double>(c1.support) / total;
    rep.weighted = {w0 * c0.precision.value + w1 * c1.precision.value, w0 * c0.recall.value + w1 * c1.recall.value,
                    w0 * c0.f1.value + w1 * c1.f1.value};
  }
  return rep;
}

inline EvaluationReport evaluate(std::span<const std::uint8_t> y_true, std::span<const std::uint8_t> y_pred) {
  return scores(confusion(y_true, y_pred));
}

// ---------------------------------------------------------------------------
// Serialisation

inline nlohmann::json rate_json(const Rate& r) { return {{"value", r.value}, {"undefined", r.undefined}}; }

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}, {"tp", cm.tp}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json classes = nlohmann::json::object();
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& s = r.per_class[c];
    classes[std::to_string(c)] = {{"precision", rate_json(s.precision)},
                                  {"recall", rate_json(s.recall)},
                                  {"f1", rate_json(s.f1)},
                                  {"support", s.support}};
  }
  auto avg = [](const Averages& a) { return nlohmann::json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}}; };
  return {{"confusion", to_json(r.confusion)},
          {"accuracy", r.accuracy},
          {"accuracy_undefined", r.accuracy_undefined},
          {"per_class", classes},
          {"macro", avg(r.macro)},
          {"weighted", avg(r.weighted)}};
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
  EvaluationReport r;
  const auto& cm = j.at("confusion");
  r.confusion = {cm.at("tn").get<std::uint64_t>(), cm.at("fp").get<std::uint64_t>(), cm.at("fn").get<std::uint64_t>(),
                 cm.at("tp").get<std::uint64_t>()};
  r.accuracy = j.at("accuracy").get<double>();
  r.accuracy_undefined = j.at("accuracy_undefined").get<bool>();
  auto rate = [](const nlohmann::json& x) { return Rate{x.at("value").get<double>(), x.at("undefined").get<bool>()}; };
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& s = j.at("per_class").at(std::to_string(c));
    r.per_class[c] = {rate(s.at("precision")), rate(s.at("recall")), rate(s.at("f1")), s.at("support").get<std::uint64_t>()};
  }
  auto avg = [](const nlohmann::json& x) {
    return Averages{x.at("precision").get<double>(), x.at("recall").get<double>(), x.at("f1").get<double>()};
  };
  r.macro = avg(j.at("macro"));
  r.weighted = avg(j.at("weighted"));
  return r;
}

/// Rows are actual class, columns predicted class.
inline std::string confusion_csv(const ConfusionMatrix& cm) {
  return "actual,predicted_0,predicted_1\n0," + std::to_string(cm.tn) + "," + std::to_string(cm.fp) + "\n1," +
         std::to_string(cm.fn) + "," + std::to_string(cm.tp) + "\n";
}

inline ConfusionMatrix parse_confusion_csv(std::string_view text) {
  const auto rec = csv::parse(text);
  require(rec.size() == 3 && rec[1].fields.size() == 3 && rec[2].fields.size() == 3, ErrorCode::Io,
          "confusion CSV must be a header plus two rows of three fields");
  auto n = [](const std::string& s) { return static_cast<std::uint64_t>(std::stoull(s)); };
  return {n(rec[1].fields[1]), n(rec[1].fields[2]), n(rec[2].fields[1]), n(rec[2].fields[2])};
}

// ---------------------------------------------------------------------------
// Comparison table

struct NamedReport {
  std::string name;
  std::optional<EvaluationReport> report;  // empty when the model failed
  std::string status = "ok";
};

inline constexpr std::string_view kComparisonHeader = "model,accuracy,precision,recall,f1";

inline std::string display_name(const std::string& name) { return name.empty() ? "(unnamed)" : name; }

inline std::string percent(double v) { return csv::format_fixed(100.0 * v, 2); }

struct ComparisonTable {
  std::string csv;
  std::string text;
  std::string accuracy_bars;  // model,accuracy
};

/// Percentages with 2 decimals; failed rows keep their place with empty
/// metric cells in the CSV and the status in the text table.
inline ComparisonTable compare_table(const std::vector<NamedReport>& rows, Averaging averaging = Averaging::Weighted) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "comparison needs at least one report");
  ComparisonTable out;
  out.csv = std::string(kComparisonHeader) + "\n";
  out.accuracy_bars = "model,accuracy\n";

  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"Model", "Accuracy", "Precision", "Recall", "F1"});
  for (const auto& row : rows) {
    const auto name = display_name(row.name);
    if (row.report) {
      const auto& a = row.report->average(averaging);
      const std::array<std::string, 5> c{name, percent(row.report->accuracy), percent(a.precision), percent(a.recall),
                                         percent(a.f1)};
      out.csv += csv::join({c[0], c[1], c[2], c[3], c[4]}) + "\n";
      out.accuracy_bars += csv::join({c[0], c[1]}) + "\n";
      cells.push_back(c);
    } else {
      out.csv += csv::join({name, "", "", "", ""}) + "\n";
      out.accuracy_bars += csv::join({name, ""}) + "\n";
      cells.push_back({name, row.status, "", "", ""});
    }
  }

  std::array<std::size_t, 5> width{};
  for (const auto& c : cells)
    for (std::size_t k = 0; k < 5; ++k) width[k] = std::max(width[k], c[k].size());
  for (const auto& c : cells) {
    std::string line = c[0] + std::string(width[0] - c[0].size(), ' ');
    for (std::size_t k = 1; k < 5; ++k) line += "  " + std::string(width[k] - c[k].size(), ' ') + c[k];
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out.text += line + "\n";
  }
  return out;
}

}  // namespace voteml
