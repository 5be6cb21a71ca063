#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lcasel/dataset.hpp"
#include "lcasel/rng.hpp"

namespace testsup {

// Builds a dataset directly from a code matrix; category counts default
// to the observed maxima unless given.
inline lcasel::CategoricalDataset make_dataset(
    const std::vector<std::vector<int>>& rows,
    std::vector<int> n_categories = {}) {
  lcasel::CategoricalDataset ds;
  ds.n_rows = static_cast<int>(rows.size());
  ds.n_vars = static_cast<int>(rows.front().size());
  if (n_categories.empty()) {
    n_categories.assign(ds.n_vars, 2);
    for (const auto& r : rows)
      for (int m = 0; m < ds.n_vars; ++m)
        n_categories[m] = std::max(n_categories[m], r[m] + 1);
  }
  ds.n_categories = n_categories;
  for (int m = 0; m < ds.n_vars; ++m) {
    ds.var_names.push_back("X" + std::to_string(m + 1));
    std::vector<std::string> levels;
    for (int c = 0; c < n_categories[m]; ++c)
      levels.push_back(std::to_string(c + 1));
    ds.level_names.push_back(levels);
  }
  for (const auto& r : rows)
    for (int v : r) ds.codes.push_back(v);
  ds.validate();
  return ds;
}

// Uniform random categorical dataset (independent columns).
inline lcasel::CategoricalDataset random_dataset(int n_rows, int n_vars,
                                                 const std::vector<int>& cats,
                                                 std::uint64_t seed) {
  lcasel::Rng rng(seed);
  std::vector<std::vector<int>> rows(n_rows, std::vector<int>(n_vars));
  for (auto& r : rows)
    for (int m = 0; m < n_vars; ++m)
      r[m] = static_cast<int>(rng.uniform01() * cats[m]);
  return make_dataset(rows, cats);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lcasel_test_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace testsup
