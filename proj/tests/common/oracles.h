#pragma once

// Reference implementations used only by tests. They are deliberately naive
// and share no code with the library beyond the Token type.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "yuepipe/textnorm.h"

namespace oracle {

using yuepipe::textnorm::Token;
using yuepipe::textnorm::TokenKind;

inline std::string lower(std::string s) {
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

inline bool same(const Token& a, const Token& b) {
  return a.kind == b.kind && (a.kind == TokenKind::kCjkChar ? a.surface == b.surface : lower(a.surface) == lower(b.surface));
}

// Levenshtein by memoised recursion over suffixes.
template <class T, class Eq>
std::size_t levenshtein(const std::vector<T>& a, const std::vector<T>& b, Eq eq) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::min(d(i + 1, j), d(i, j + 1)) + 1;
    best = std::min(best, d(i + 1, j + 1) + (eq(a[i], b[j]) ? 0 : 1));
    memo[key] = best;
    return best;
  };
  return d(0, 0);
}

inline std::size_t levenshtein(const std::vector<Token>& a, const std::vector<Token>& b) {
  return levenshtein(a, b, same);
}

// Exact optimum over all three-way column alignments, scored column by
// column: system 1 is free; a later system's token costs 0 when an earlier
// system holds the same word in the column, else 1; its gap costs 1 when an
// earlier system holds any token.
inline std::size_t three_way_optimum(const std::vector<Token>& a, const std::vector<Token>& b,
                                     const std::vector<Token>& c) {
  const std::size_t A = a.size(), B = b.size(), C = c.size();
  const std::size_t inf = std::numeric_limits<std::size_t>::max() / 2;
  std::vector<std::size_t> dp((A + 1) * (B + 1) * (C + 1), inf);
  auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> std::size_t& { return dp[(i * (B + 1) + j) * (C + 1) + k]; };
  at(0, 0, 0) = 0;
  for (std::size_t i = 0; i <= A; ++i)
    for (std::size_t j = 0; j <= B; ++j)
      for (std::size_t k = 0; k <= C; ++k) {
        const std::size_t here = at(i, j, k);
        if (here >= inf) continue;
        for (int mask = 1; mask < 8; ++mask) {
          const bool ua = mask & 1, ub = mask & 2, uc = mask & 4;
          if ((ua && i == A) || (ub && j == B) || (uc && k == C)) continue;
          const Token* x = ua ? &a[i] : nullptr;
          const Token* y = ub ? &b[j] : nullptr;
          const Token* z = uc ? &c[k] : nullptr;
          std::size_t cost = 0;
          if (y) cost += (x && same(*x, *y)) ? 0 : 1;
          else cost += x ? 1 : 0;
          if (z) cost += ((x && same(*x, *z)) || (y && same(*y, *z))) ? 0 : 1;
          else cost += (x || y) ? 1 : 0;
          std::size_t& next = at(i + ua, j + ub, k + uc);
          next = std::min(next, here + cost);
        }
      }
  return at(A, B, C);
}

// Power spectrum by direct DFT, periodic Hann, frames of n with hop n/2,
// averaged; short inputs give one zero-padded frame.
inline std::vector<double> dft_power(const std::vector<double>& x, std::size_t n = 1024) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  std::vector<std::size_t> starts;
  if (x.size() < n) starts.push_back(0);
  else
    for (std::size_t s = 0; s + n <= x.size(); s += n / 2) starts.push_back(s);
  std::vector<double> p(n / 2 + 1, 0.0);
  for (std::size_t s : starts) {
    for (std::size_t k = 0; k <= n / 2; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = s + i < x.size() ? x[s + i] * w[i] : 0.0;
        acc += v * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / n);
      }
      p[k] += std::norm(acc);
    }
  }
  for (double& v : p) v /= static_cast<double>(starts.size());
  return p;
}

inline std::size_t rolloff_bin(const std::vector<double>& p, double fraction) {
  double total = 0.0;
  for (double v : p) total += v;
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (acc >= fraction * total) return k;
  }
  return p.size() - 1;
}

// Default (first) jyutping reading straight from the TSV text.
inline std::optional<std::string> first_reading(const std::string& table_path, const std::string& character) {
  std::ifstream in(table_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(character + "\t", 0) != 0) continue;
    std::string rest = line.substr(character.size() + 1);
    return rest.substr(0, rest.find(','));
  }
  return std::nullopt;
}

// Raw (key, value) pairs of a two-column TSV, comments skipped.
inline std::vector<std::pair<std::string, std::string>> tsv_pairs(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    std::string v = line.substr(tab + 1);
    if (auto t2 = v.find('\t'); t2 != std::string::npos) v.resize(t2);
    out.emplace_back(line.substr(0, tab), v);
  }
  return out;
}

inline Token cjk(const char* s) { return {TokenKind::kCjkChar, s}; }
inline Token latin(const char* s) { return {TokenKind::kLatinWord, s}; }

// Random token sequences over a small alphabet so that matches are common.
inline std::vector<Token> random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet = 6) {
  static const char* kCjk[] = {"我", "哋", "去", "食", "饭", "好", "唔", "系"};
  static const char* kLatin[] = {"OK", "ok", "iPhone", "app"};
  std::vector<Token> out(rng() % (max_len + 1));
  for (Token& t : out) {
    const std::size_t r = rng() % (alphabet + 2);
    if (r < alphabet) t = cjk(kCjk[r % 8]);
    else t = latin(kLatin[rng() % 4]);
  }
  return out;
}

}  // namespace oracle
