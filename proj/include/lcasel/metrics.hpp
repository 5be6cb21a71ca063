#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace lcasel {

namespace detail {

inline __int128 choose2(long long n) {
  return static_cast<__int128>(n) * (n - 1) / 2;
}

}  // namespace detail

// Hubert-Arabie adjusted Rand index from a cross-tabulation of two
// partitions. Pair counts are exact integers; a single floating division
// happens at the end. The degenerate 0/0 case (both partitions trivial)
// is 1 when the partitions induce the same equivalence relation, else 0.
inline double ari_from_contingency(
    const std::vector<std::vector<long long>>& table) {
  if (table.empty()) throw std::invalid_argument("empty contingency table");
  const std::size_t n_cols = table.front().size();
  long long total = 0;
  std::vector<long long> row_sum(table.size(), 0), col_sum(n_cols, 0);
  __int128 index = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].size() != n_cols)
      throw std::invalid_argument("ragged contingency table");
    for (std::size_t j = 0; j < n_cols; ++j) {
      const long long n = table[i][j];
      if (n < 0) throw std::invalid_argument("negative cell count");
      row_sum[i] += n;
      col_sum[j] += n;
      total += n;
      index += detail::choose2(n);
    }
  }
  if (total < 1) throw std::invalid_argument("empty contingency table");

  __int128 sum_a = 0, sum_b = 0;
  for (long long a : row_sum) sum_a += detail::choose2(a);
  for (long long b : col_sum) sum_b += detail::choose2(b);
  const __int128 pairs = detail::choose2(total);

  if (pairs == 0) return 1.0;  // single observation
  const long double expected =
      static_cast<long double>(sum_a) * static_cast<long double>(sum_b) /
      static_cast<long double>(pairs);
  const long double max_index =
      (static_cast<long double>(sum_a) + static_cast<long double>(sum_b)) / 2;

  if (max_index == expected) {
    // Both margins trivial; partitions agree iff nonzero cells form a
    // bijection between row and column labels.
    for (std::size_t i = 0; i < table.size(); ++i)
      for (std::size_t j = 0; j < n_cols; ++j)
        if (table[i][j] > 0 &&
            (table[i][j] != row_sum[i] || table[i][j] != col_sum[j]))
          return 0.0;
    return 1.0;
  }
  return static_cast<double>(
      (static_cast<long double>(index) - expected) / (max_index - expected));
}

// ARI between two label vectors. Labels may be any integers.
inline double ari(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("partition length mismatch");
  if (a.empty()) throw std::invalid_argument("empty partitions");
  std::map<int, int> ra, rb;
  for (int v : a) ra.emplace(v, static_cast<int>(ra.size()));
  for (int v : b) rb.emplace(v, static_cast<int>(rb.size()));
  std::vector<std::vector<long long>> table(
      ra.size(), std::vector<long long>(rb.size(), 0));
  for (std::size_t n = 0; n < a.size(); ++n)
    ++table[ra.at(a[n])][rb.at(b[n])];
  return ari_from_contingency(table);
}

inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  return ari(std::span<const int>(a), std::span<const int>(b));
}

}  // namespace lcasel
