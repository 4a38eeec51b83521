#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "deltabound/errors.hpp"
#include "deltabound/oracle.hpp"
#include "deltabound/vector_ops.hpp"

namespace deltabound {

struct LabeledDataset {
  std::vector<Vector> features;  // n rows of d values
  std::vector<Label> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;  // class_names[k] is the raw label mapped to k
  int n_classes = 0;

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? feature_names.size() : features.front().size(); }

  void check() const {
    if (features.empty()) throw InvalidArgument("dataset is empty");
    if (labels.size() != features.size()) throw InvalidArgument("dataset has mismatched label count");
    const std::size_t d = features.front().size();
    for (const auto& row : features) {
      if (row.size() != d) throw InvalidArgument("dataset rows have different lengths");
      for (double v : row) {
        if (!std::isfinite(v)) throw InvalidArgument("dataset contains a non-finite value");
      }
    }
    for (Label y : labels) {
      if (y < 0 || y >= n_classes) throw InvalidArgument("dataset label out of range");
    }
  }
};

struct CsvOptions {
  std::string label_column;
  std::optional<std::string> positive_label;  // binary: this value -> 1, all others -> 0
  std::vector<std::string> ignore_columns;
};

namespace csv_detail {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

// Comma separated, double quotes may wrap a field ("" is an escaped quote).
inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace csv_detail

// Features are every non-label, non-ignored column, in header order. Labels
// map to 0, 1, ... by first occurrence unless positive_label is given.
inline LabeledDataset load_csv_dataset(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = csv_detail::split_line(line);

  std::optional<std::size_t> label_idx;
  std::vector<std::size_t> feature_idx;
  LabeledDataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == opts.label_column) {
      label_idx = c;
    } else if (std::find(opts.ignore_columns.begin(), opts.ignore_columns.end(), header[c]) ==
               opts.ignore_columns.end()) {
      feature_idx.push_back(c);
      ds.feature_names.push_back(header[c]);
    }
  }
  if (!label_idx) throw MissingColumn(path.string() + ": label column '" + opts.label_column + "' not found");
  for (const auto& ign : opts.ignore_columns) {
    if (std::find(header.begin(), header.end(), ign) == header.end()) {
      throw MissingColumn(path.string() + ": ignored column '" + ign + "' not found");
    }
  }
  if (feature_idx.empty()) throw ParseError(path.string() + ": no feature columns");

  if (opts.positive_label) ds.class_names = {"not " + *opts.positive_label, *opts.positive_label};
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv_detail::trim(line).empty()) continue;
    const auto cells = csv_detail::split_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(path.string() + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                       " cells, header has " + std::to_string(header.size()));
    }
    Vector x(feature_idx.size());
    for (std::size_t j = 0; j < feature_idx.size(); ++j) {
      const auto& cell = cells[feature_idx[j]];
      if (!csv_detail::parse_double(cell, x[j])) {
        throw ParseError(path.string() + ": row " + std::to_string(row_no) + ", column '" +
                         header[feature_idx[j]] + "': cannot parse '" + cell + "' as a number");
      }
    }
    const std::string& raw = cells[*label_idx];
    Label y;
    if (opts.positive_label) {
      y = raw == *opts.positive_label ? 1 : 0;
    } else {
      auto it = std::find(ds.class_names.begin(), ds.class_names.end(), raw);
      if (it == ds.class_names.end()) {
        ds.class_names.push_back(raw);
        it = ds.class_names.end() - 1;
      }
      y = static_cast<Label>(it - ds.class_names.begin());
    }
    ds.features.push_back(std::move(x));
    ds.labels.push_back(y);
  }
  if (ds.features.empty()) throw ParseError(path.string() + ": no data rows");
  ds.n_classes = std::max<int>(2, static_cast<int>(ds.class_names.size()));
  return ds;
}

}  // namespace deltabound
