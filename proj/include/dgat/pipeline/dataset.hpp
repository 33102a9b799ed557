// SPDX-FileCopyrightText: Copyright (c) 2026 the dgat authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// CSV dataset ingestion.
//
// Expected layout: header row with a `smiles` column followed by zero or
// more task columns; every other row is one molecule. An empty cell is a
// missing label. Rows whose SMILES fails to parse, or which carry task
// columns but no label at all, are skipped and counted rather than failing
// the whole load.

#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dgat/common/error.hpp"
#include "dgat/common/io.hpp"
#include "dgat/molgraph/molecule.hpp"
#include "dgat/molgraph/smiles.hpp"

namespace dgat {

enum class TaskKind : uint8_t { kBinary, kRegression };

inline const char *task_kind_name(TaskKind k) {
  return k == TaskKind::kBinary ? "binary" : "regression";
}

inline TaskKind task_kind_from_name(const std::string &name) {
  if (name == "binary") return TaskKind::kBinary;
  if (name == "regression") return TaskKind::kRegression;
  throw ConfigError("unknown task kind: " + name +
                    " (expected binary or regression)");
}

struct TaskSchema {
  std::vector<std::string> names;
  TaskKind kind = TaskKind::kBinary;

  int n_tasks() const { return static_cast<int>(names.size()); }
};

struct DataRecord {
  std::string smiles;
  Molecule mol;
  std::vector<double> targets;  // schema order; value undefined where absent
  std::vector<bool> has_label;
};

struct Dataset {
  TaskSchema schema;
  std::vector<DataRecord> records;
  int n_skipped_parse = 0;
  int n_skipped_unlabeled = 0;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(records.size()); }
};

namespace detail {

// Minimal CSV field splitter; supports double-quoted fields with "" escapes.
// A quote only opens a field (mid-field quotes are literal characters).
inline std::vector<std::string> split_csv_line(const std::string &line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trim(const std::string &s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r'))
    --b;
  return s.substr(a, b - a);
}

inline bool parse_double(const std::string &s, double &out) {
  const char *begin = s.data();
  const char *end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

} // namespace detail

// Loads a CSV of molecules; all task columns share `kind`. Files with only
// a smiles column yield a taskless dataset (used for recovery-only
// pretraining corpora).
inline Dataset load_dataset(const std::string &path, TaskKind kind) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw DataError("dataset is empty: " + path);
  const auto header = detail::split_csv_line(line);
  int smiles_col = -1;
  Dataset ds;
  ds.schema.kind = kind;
  std::vector<int> task_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = detail::trim(header[i]);
    if (name == "smiles") {
      if (smiles_col >= 0)
        throw DataError("dataset has duplicate smiles columns: " + path);
      smiles_col = static_cast<int>(i);
    } else {
      ds.schema.names.push_back(name);
      task_cols.push_back(static_cast<int>(i));
    }
  }
  if (smiles_col < 0)
    throw DataError("dataset is missing a smiles column: " + path);

  const int n_tasks = ds.schema.n_tasks();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      ds.warnings.push_back("line " + std::to_string(line_no) +
                            ": wrong field count, skipped");
      ++ds.n_skipped_parse;
      continue;
    }
    DataRecord rec;
    rec.smiles = detail::trim(fields[smiles_col]);
    try {
      rec.mol = parse_smiles(rec.smiles);
    } catch (const ParseError &e) {
      ds.warnings.push_back("line " + std::to_string(line_no) + ": " +
                            e.what() + ", skipped");
      ++ds.n_skipped_parse;
      continue;
    }
    rec.targets.assign(n_tasks, 0.0);
    rec.has_label.assign(n_tasks, false);
    int labeled = 0;
    bool bad_value = false;
    for (int t = 0; t < n_tasks; ++t) {
      const std::string cell = detail::trim(fields[task_cols[t]]);
      if (cell.empty()) continue;
      double v;
      if (!detail::parse_double(cell, v) ||
          (kind == TaskKind::kBinary && v != 0.0 && v != 1.0)) {
        ds.warnings.push_back("line " + std::to_string(line_no) + ": bad " +
                              task_kind_name(kind) + " label '" + cell +
                              "' in column " + ds.schema.names[t] +
                              ", skipped");
        bad_value = true;
        break;
      }
      rec.targets[t] = v;
      rec.has_label[t] = true;
      ++labeled;
    }
    if (bad_value) {
      ++ds.n_skipped_parse;
      continue;
    }
    if (n_tasks > 0 && labeled == 0) {
      ++ds.n_skipped_unlabeled;
      continue;
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty())
    throw DataError("dataset has no usable rows: " + path);
  return ds;
}

} // namespace dgat
