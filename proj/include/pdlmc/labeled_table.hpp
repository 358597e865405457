#pragma once

// Labeled tables in the CSV schema
//   feat_* (real) ..., label (0/1), group (string)
// with a header row. Loading prepends an intercept column of ones.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "pdlmc/errors.hpp"

namespace pdlmc {

struct GroupRows {
  std::string name;
  std::vector<std::size_t> rows;
};

struct LabeledTable {
  /// Names of the file's feature columns; the intercept is not listed.
  std::vector<std::string> feature_names;
  /// Row-major, num_rows() x num_cols(); column 0 is the intercept.
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<std::string> group_names;
  std::vector<std::size_t> group_of_row;

  std::size_t num_rows() const noexcept { return labels.size(); }
  std::size_t num_cols() const noexcept { return feature_names.size() + 1; }
  const double* row(std::size_t n) const noexcept { return features.data() + n * num_cols(); }

  void append_row(const std::vector<double>& file_features, int label, std::size_t group) {
    features.push_back(1.0);
    features.insert(features.end(), file_features.begin(), file_features.end());
    labels.push_back(label);
    group_of_row.push_back(group);
  }

  /// Row indices per group, in group order.
  std::vector<GroupRows> groups() const {
    std::vector<GroupRows> out;
    for (const auto& name : group_names) out.push_back({name, {}});
    for (std::size_t n = 0; n < group_of_row.size(); ++n) out[group_of_row[n]].rows.push_back(n);
    return out;
  }

  bool operator==(const LabeledTable&) const = default;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// 17 significant digits, enough to parse back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

}  // namespace detail

inline LabeledTable load_labeled_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open labeled table '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
  const auto header = detail::split_commas(line);
  LabeledTable t;
  std::vector<std::size_t> feature_cols;
  std::size_t label_col = header.size();
  std::size_t group_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = detail::trim(header[c]);
    if (name.starts_with("feat_")) {
      feature_cols.push_back(c);
      t.feature_names.emplace_back(name);
    } else if (name == "label") {
      label_col = c;
    } else if (name == "group") {
      group_col = c;
    } else {
      throw ConfigError(path + ":1: unexpected column '" + std::string(name) + "'");
    }
  }
  if (label_col == header.size()) throw ConfigError(path + ":1: no 'label' column");
  if (group_col == header.size()) throw ConfigError(path + ":1: no 'group' column");

  std::size_t line_no = 1;
  std::vector<double> row(feature_cols.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto cells = detail::split_commas(line);
    if (cells.size() != header.size()) {
      throw ConfigError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      if (!detail::parse_double(cells[feature_cols[j]], row[j])) {
        throw ConfigError(where + ": missing or malformed value in column '" +
                          t.feature_names[j] + "'");
      }
    }
    const auto label = detail::trim(cells[label_col]);
    if (label != "0" && label != "1") {
      throw ConfigError(where + ": label must be 0 or 1, got '" + std::string(label) + "'");
    }
    const auto group = detail::trim(cells[group_col]);
    if (group.empty()) throw ConfigError(where + ": missing group");
    std::size_t gi = 0;
    while (gi < t.group_names.size() && t.group_names[gi] != group) ++gi;
    if (gi == t.group_names.size()) t.group_names.emplace_back(group);
    t.append_row(row, label == "1" ? 1 : 0, gi);
  }
  return t;
}

inline void write_labeled_csv(const LabeledTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write labeled table '" + path + "'");
  for (const auto& name : t.feature_names) out << name << ',';
  out << "label,group\n";
  for (std::size_t n = 0; n < t.num_rows(); ++n) {
    const double* r = t.row(n);
    for (std::size_t j = 1; j < t.num_cols(); ++j) out << detail::format_double(r[j]) << ',';
    out << t.labels[n] << ',' << t.group_names[t.group_of_row[n]] << '\n';
  }
}

/// Return series CSV: header of asset names, one row per period.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> load_returns_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open return series '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": missing header row");
  std::vector<std::string> names;
  for (auto cell : detail::split_commas(line)) names.emplace_back(detail::trim(cell));
  std::vector<std::vector<double>> series(names.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    if (cells.size() != names.size()) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(names.size()) + " fields");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      double v = 0.0;
      if (!detail::parse_double(cells[i], v)) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": malformed value for '" +
                          names[i] + "'");
      }
      series[i].push_back(v);
    }
  }
  return {names, series};
}

inline void write_returns_csv(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& series,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write return series '" + path + "'");
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  const std::size_t length = series.empty() ? 0 : series[0].size();
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      out << (i ? "," : "") << detail::format_double(series[i][t]);
    }
    out << '\n';
  }
}

}  // namespace pdlmc
