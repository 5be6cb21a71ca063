#pragma once

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace lcasel {

// Integer-coded multivariate categorical data. Codes at column m lie in
// [0, n_categories[m]); every variable has at least two observed levels.
// Immutable after construction, safe to share across threads.
struct CategoricalDataset {
  int n_rows = 0;
  int n_vars = 0;
  std::vector<int> codes;  // row-major, n_rows x n_vars
  std::vector<int> n_categories;
  std::vector<std::string> var_names;
  std::vector<std::vector<std::string>> level_names;

  int code(int row, int var) const {
    return codes[static_cast<std::size_t>(row) * n_vars + var];
  }

  int var_index(const std::string& name) const {
    for (int m = 0; m < n_vars; ++m)
      if (var_names[m] == name) return m;
    throw std::invalid_argument("unknown variable name: " + name);
  }

  void validate() const {
    if (n_rows <= 0) throw std::invalid_argument("empty dataset");
    if (n_vars <= 0) throw std::invalid_argument("dataset has no variables");
    if (codes.size() != static_cast<std::size_t>(n_rows) * n_vars)
      throw std::invalid_argument("code matrix shape mismatch");
    std::set<std::string> names(var_names.begin(), var_names.end());
    if (static_cast<int>(names.size()) != n_vars)
      throw std::invalid_argument("variable names are not unique");
    for (int m = 0; m < n_vars; ++m) {
      if (n_categories[m] < 2)
        throw std::invalid_argument("constant column: " + var_names[m]);
      for (int n = 0; n < n_rows; ++n) {
        const int c = code(n, m);
        if (c < 0 || c >= n_categories[m])
          throw std::invalid_argument("code out of range in column " +
                                      var_names[m]);
      }
    }
  }
};

// Partition of the variable indices into the clustering set and the rest.
struct VariableRoles {
  std::vector<int> clustering;
  std::vector<int> other;

  void validate(int n_vars) const {
    std::vector<int> all(clustering);
    all.insert(all.end(), other.begin(), other.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expect(n_vars);
    std::iota(expect.begin(), expect.end(), 0);
    if (all != expect)
      throw std::invalid_argument(
          "variable roles must partition all variable indices");
  }
};

enum class MissingPolicy { kDropRows, kError };

struct CsvOptions {
  bool header = true;
  MissingPolicy missing = MissingPolicy::kDropRows;
};

struct CsvLoadReport {
  int rows_dropped = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  if (out.empty()) out.emplace_back();
  return out;
}

inline bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA";
}

}  // namespace detail

// Loads a UTF-8 comma-separated file. Levels are coded in first-appearance
// order over the retained rows, so identical bytes always produce an
// identical dataset.
inline CategoricalDataset load_csv(const std::string& path,
                                   const CsvOptions& options = {},
                                   CsvLoadReport* report = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && rows.empty()) continue;
    rows.push_back(detail::split_csv_line(line));
  }
  if (rows.empty()) throw std::runtime_error("empty dataset: " + path);

  CategoricalDataset ds;
  std::size_t n_cols = rows.front().size();
  std::size_t first_data = 0;
  if (options.header) {
    for (const auto& h : rows.front()) ds.var_names.push_back(h);
    first_data = 1;
  } else {
    for (std::size_t m = 0; m < n_cols; ++m)
      ds.var_names.push_back("X" + std::to_string(m + 1));
  }
  ds.n_vars = static_cast<int>(n_cols);

  // First pass: rectangularity and the missing-row policy.
  std::vector<std::size_t> retained;
  int dropped = 0;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    if (rows[r].size() != n_cols)
      throw std::runtime_error("non-rectangular input at data row " +
                               std::to_string(r - first_data + 1));
    bool missing = false;
    for (const auto& cell : rows[r])
      if (detail::is_missing(cell)) { missing = true; break; }
    if (missing) {
      if (options.missing == MissingPolicy::kError)
        throw std::runtime_error("missing value at data row " +
                                 std::to_string(r - first_data + 1));
      ++dropped;
    } else {
      retained.push_back(r);
    }
  }
  if (report) report->rows_dropped = dropped;
  if (retained.empty()) throw std::runtime_error("empty dataset: " + path);

  // Second pass: encode levels in first-appearance order.
  ds.n_rows = static_cast<int>(retained.size());
  ds.codes.resize(static_cast<std::size_t>(ds.n_rows) * ds.n_vars);
  ds.level_names.resize(ds.n_vars);
  std::vector<std::unordered_map<std::string, int>> level_code(ds.n_vars);
  for (std::size_t i = 0; i < retained.size(); ++i) {
    const auto& row = rows[retained[i]];
    for (int m = 0; m < ds.n_vars; ++m) {
      auto [it, inserted] = level_code[m].try_emplace(
          row[m], static_cast<int>(ds.level_names[m].size()));
      if (inserted) ds.level_names[m].push_back(row[m]);
      ds.codes[i * ds.n_vars + m] = it->second;
    }
  }
  for (int m = 0; m < ds.n_vars; ++m)
    ds.n_categories.push_back(static_cast<int>(ds.level_names[m].size()));

  ds.validate();
  return ds;
}

}  // namespace lcasel
