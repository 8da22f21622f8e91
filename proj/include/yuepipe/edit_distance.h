#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace yuepipe {

/// Unit-cost Levenshtein distance, single-row DP.
template <typename T, typename Eq = std::equal_to<T>>
std::size_t edit_distance(std::span<const T> a, std::span<const T> b, Eq eq = {}) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({diag + (eq(a[i - 1], b[j - 1]) ? 0 : 1), up + 1, row[j - 1] + 1});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Distance divided by the longer length; 0 when both are empty.
template <typename T, typename Eq = std::equal_to<T>>
double normalized_edit_distance(std::span<const T> a, std::span<const T> b, Eq eq = {}) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(edit_distance(a, b, eq)) / static_cast<double>(longest);
}

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t matches = 0;

  std::size_t errors() const noexcept { return substitutions + deletions + insertions; }
};

/// Full-matrix Levenshtein with a backtrace that splits the minimum cost into
/// substitutions, deletions (reference tokens missing from the hypothesis) and
/// insertions. On ties the backtrace prefers match/substitution, then deletion.
template <typename T, typename Eq = std::equal_to<T>>
EditCounts edit_counts(std::span<const T> ref, std::span<const T> hyp, Eq eq = {}) {
  const std::size_t m = ref.size();
  const std::size_t n = hyp.size();
  std::vector<std::size_t> cost((m + 1) * (n + 1));
  auto at = [n](std::size_t i, std::size_t j) { return i * (n + 1) + j; };
  for (std::size_t i = 0; i <= m; ++i) cost[at(i, 0)] = i;
  for (std::size_t j = 0; j <= n; ++j) cost[at(0, j)] = j;
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j)
      cost[at(i, j)] = std::min({cost[at(i - 1, j - 1)] + (eq(ref[i - 1], hyp[j - 1]) ? 0 : 1),
                                 cost[at(i - 1, j)] + 1, cost[at(i, j - 1)] + 1});

  EditCounts counts;
  std::size_t i = m;
  std::size_t j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = eq(ref[i - 1], hyp[j - 1]);
      if (cost[at(i, j)] == cost[at(i - 1, j - 1)] + (same ? 0 : 1)) {
        ++(same ? counts.matches : counts.substitutions);
        --i, --j;
        continue;
      }
    }
    if (i > 0 && cost[at(i, j)] == cost[at(i - 1, j)] + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

}  // namespace yuepipe
