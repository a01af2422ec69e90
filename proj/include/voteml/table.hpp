#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "voteml/csv.hpp"
#include "voteml/error.hpp"
#include "voteml/io.hpp"

namespace voteml {

enum class ColumnKind { Categorical, BinaryTarget };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Categorical;
  bool allowed_missing = true;
  // Only meaningful for the binary target: the two admissible categories.
  std::string positive_label;
  std::string negative_label;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

inline std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<ColumnSchema> columns) : columns_(std::move(columns)) {
    std::set<std::string> seen;
    std::size_t targets = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      auto& c = columns_[i];
      c.name = trim(c.name);
      require(!c.name.empty(), ErrorCode::SchemaInvalid, "empty column name");
      require(seen.insert(c.name).second, ErrorCode::SchemaInvalid, "duplicate column " + c.name);
      if (c.kind == ColumnKind::BinaryTarget) {
        ++targets;
        target_ = i;
        require(!c.positive_label.empty() && !c.negative_label.empty() &&
                    c.positive_label != c.negative_label,
                ErrorCode::SchemaInvalid, "target needs two distinct labels");
      }
    }
    require(targets == 1, ErrorCode::SchemaInvalid,
            "exactly one binary-target column required, found " + std::to_string(targets));
  }

  const std::vector<ColumnSchema>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }
  std::size_t target_index() const noexcept { return target_; }
  const ColumnSchema& target() const { return columns_[target_]; }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_)
      if (c.kind == ColumnKind::Categorical) out.push_back(c.name);
    return out;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
      if (columns_[i].name == name) return i;
    return std::nullopt;
  }

  friend bool operator==(const Schema&, const Schema&) = default;

 private:
  std::vector<ColumnSchema> columns_;
  std::size_t target_ = 0;
};

inline nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : schema.columns()) {
    nlohmann::json j{{"name", c.name},
                     {"kind", c.kind == ColumnKind::BinaryTarget ? "binary-target" : "categorical"},
                     {"allowed_missing", c.allowed_missing}};
    if (c.kind == ColumnKind::BinaryTarget) {
      j["positive"] = c.positive_label;
      j["negative"] = c.negative_label;
    }
    cols.push_back(std::move(j));
  }
  return {{"columns", std::move(cols)}};
}

inline Schema schema_from_json(const nlohmann::json& j) {
  try {
    std::vector<ColumnSchema> cols;
    for (const auto& c : j.at("columns")) {
      ColumnSchema col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.value("kind", std::string("categorical"));
      if (kind == "binary-target") {
        col.kind = ColumnKind::BinaryTarget;
        col.positive_label = c.at("positive").get<std::string>();
        col.negative_label = c.at("negative").get<std::string>();
        col.allowed_missing = c.value("allowed_missing", false);
      } else if (kind == "categorical") {
        col.allowed_missing = c.value("allowed_missing", true);
      } else {
        fail(ErrorCode::SchemaInvalid, "unknown column kind '" + kind + "'");
      }
      cols.push_back(std::move(col));
    }
    return Schema(std::move(cols));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaInvalid, e.what());
  }
}

inline Schema load_schema(const std::filesystem::path& path) {
  try {
    return schema_from_json(nlohmann::json::parse(csv::read_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::SchemaInvalid, path.string() + ": " + e.what());
  }
}

/// The seven survey features plus the PTSD target.
inline Schema disaster_survey_schema() {
  std::vector<ColumnSchema> cols = {
      {"Age", ColumnKind::Categorical, true, {}, {}},
      {"Current Occupation", ColumnKind::Categorical, true, {}, {}},
      {"Type of Disaster Faced", ColumnKind::Categorical, true, {}, {}},
      {"Access to Safe Shelter Post-Disaster", ColumnKind::Categorical, true, {}, {}},
      {"Observed Mental Health Issues Post-Disaster", ColumnKind::Categorical, true, {}, {}},
      {"Mental or Physical Issues from Mental Distress", ColumnKind::Categorical, true, {}, {}},
      {"Safety During Disaster", ColumnKind::Categorical, true, {}, {}},
      {"PTSD", ColumnKind::BinaryTarget, false, "Yes", "No"},
  };
  return Schema(std::move(cols));
}

/// A cell is either text or explicitly missing.
using Cell = std::optional<std::string>;

struct Table {
  Schema schema;
  std::vector<std::vector<Cell>> columns;  // one entry per schema column

  std::size_t n_rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const std::vector<Cell>& column(std::string_view name) const {
    const auto idx = schema.find(name);
    if (!idx) fail(ErrorCode::UnknownColumn, std::string(name));
    return columns[*idx];
  }
  std::vector<Cell>& column(std::string_view name) {
    const auto idx = schema.find(name);
    if (!idx) fail(ErrorCode::UnknownColumn, std::string(name));
    return columns[*idx];
  }
  const std::vector<Cell>& target_column() const { return columns[schema.target_index()]; }

  Table select_rows(std::span<const std::size_t> rows) const {
    Table out{schema, {}};
    out.columns.resize(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out.columns[c].reserve(rows.size());
      for (auto r : rows) out.columns[c].push_back(columns[c][r]);
    }
    return out;
  }

  friend bool operator==(const Table&, const Table&) = default;
};

struct CsvOptions {
  std::set<std::string> missing_tokens{"", "NA", "N/A"};
};

/// Reads a CSV into the columns named by `schema`; extra CSV columns are ignored.
inline Table parse_table(std::string_view text, const Schema& schema, const CsvOptions& options = {}) {
  const auto records = csv::parse(text);
  if (records.empty()) fail(ErrorCode::MissingColumn, "no header row");

  const auto& header = records.front().fields;
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) position.emplace(trim(header[i]), i);

  std::vector<std::size_t> source(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const auto it = position.find(schema.columns()[c].name);
    if (it == position.end()) fail(ErrorCode::MissingColumn, schema.columns()[c].name);
    source[c] = it->second;
  }

  Table table{schema, std::vector<std::vector<Cell>>(schema.size())};
  const auto& target = schema.target();
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (header.size() > 1 && rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    if (rec.fields.size() != header.size())
      fail(ErrorCode::RaggedRow, "line " + std::to_string(rec.line) + " has " +
                                     std::to_string(rec.fields.size()) + " fields, expected " +
                                     std::to_string(header.size()));
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& raw = rec.fields[source[c]];
      Cell cell = options.missing_tokens.contains(raw) ? Cell{} : Cell{raw};
      if (c == schema.target_index() && cell && *cell != target.positive_label &&
          *cell != target.negative_label)
        fail(ErrorCode::InvalidTargetValue,
             "line " + std::to_string(rec.line) + ": target value '" + *cell + "'");
      table.columns[c].push_back(std::move(cell));
    }
  }
  return table;
}

inline Table load_csv(const std::filesystem::path& path, const Schema& schema,
                      const CsvOptions& options = {}) {
  return parse_table(csv::read_file(path), schema, options);
}

/// Missing cells are written as the empty string.
inline std::string table_to_csv(const Table& table) {
  std::string out;
  std::vector<std::string> fields;
  for (const auto& c : table.schema.columns()) fields.push_back(c.name);
  out += csv::join(fields) + "\n";
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    fields.clear();
    for (const auto& col : table.columns) fields.push_back(col[r].value_or(std::string{}));
    out += csv::join(fields) + "\n";
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const Table& table) {
  write_file_atomic(path, table_to_csv(table));
}

struct ColumnSummary {
  std::string name;
  std::size_t missing = 0;
  std::map<std::string, std::size_t> category_counts;

  std::size_t distinct() const { return category_counts.size(); }
};

struct ValidationReport {
  std::vector<ColumnSummary> columns;
  std::size_t n_rows = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

inline ValidationReport summarize(const Table& table) {
  ValidationReport report;
  report.n_rows = table.n_rows();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    ColumnSummary s;
    s.name = table.schema.columns()[c].name;
    for (const auto& cell : table.columns[c]) {
      if (cell)
        ++s.category_counts[*cell];
      else
        ++s.missing;
    }
    report.columns.push_back(std::move(s));
  }
  const auto& target = table.schema.target();
  const auto& counts = report.columns[table.schema.target_index()].category_counts;
  if (auto it = counts.find(target.positive_label); it != counts.end()) report.positives = it->second;
  if (auto it = counts.find(target.negative_label); it != counts.end()) report.negatives = it->second;
  return report;
}

/// Checks column-length consistency and missingness rules. Missing target
/// cells are an error: labels are never imputed.
inline ValidationReport validate(const Table& table) {
  require(table.columns.size() == table.schema.size(), ErrorCode::SchemaInvalid,
          "column count differs from schema");
  for (const auto& col : table.columns)
    require(col.size() == table.n_rows(), ErrorCode::RaggedRow, "columns differ in length");

  auto report = summarize(table);
  for (std::size_t c = 0; c < report.columns.size(); ++c) {
    const auto& s = report.columns[c];
    if (c == table.schema.target_index()) {
      if (s.missing > 0)
        fail(ErrorCode::TargetMissingEntries,
             std::to_string(s.missing) + " rows of '" + s.name + "' are missing");
      for (const auto& [cat, n] : s.category_counts)
        require(cat == table.schema.target().positive_label ||
                    cat == table.schema.target().negative_label,
                ErrorCode::InvalidTargetValue, cat);
    } else if (!table.schema.columns()[c].allowed_missing && s.missing > 0) {
      fail(ErrorCode::DisallowedMissing, s.name);
    }
  }
  return report;
}

/// Removes rows whose target is missing; returns the number removed.
inline std::size_t drop_missing_target(Table& table) {
  std::vector<std::size_t> keep;
  const auto& target = table.target_column();
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    if (target[r]) keep.push_back(r);
  const std::size_t dropped = table.n_rows() - keep.size();
  if (dropped) table = table.select_rows(keep);
  return dropped;
}

}  // namespace voteml
