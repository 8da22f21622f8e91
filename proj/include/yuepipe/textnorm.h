#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace yuepipe::textnorm {

enum class TokenKind { kCjkChar, kLatinWord };

struct Token {
  TokenKind kind = TokenKind::kCjkChar;
  std::string surface;

  /// Comparison key: Latin words are case-folded, CJK characters verbatim.
  std::string key() const;
  bool operator==(const Token&) const = default;
};

/// True when the two tokens count as the same word for voting and scoring.
bool same_word(const Token& a, const Token& b);

/// Raised by tokenize() on a codepoint outside the CJK/Latin/digit/space classes.
class ClassificationError : public std::runtime_error {
 public:
  ClassificationError(char32_t cp, std::size_t position);
  char32_t codepoint() const noexcept { return cp_; }
  std::size_t position() const noexcept { return position_; }

 private:
  char32_t cp_;
  std::size_t position_;
};

class TableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NumeralRule {
  enum class Reading { kDigits, kCardinal };

  std::u32string prefix;  // literal text immediately before the digit run
  std::u32string suffix;  // literal text immediately after it
  std::u32string out_prefix;
  std::u32string out_suffix;
  Reading reading = Reading::kDigits;
};

/// Immutable once built; safe to share between threads.
struct NormalizationTables {
  std::unordered_map<char32_t, char32_t> trad_to_simp;
  std::unordered_set<char32_t> punct_class;
  std::vector<NumeralRule> numeral_rules;

  /// Loads trad_simp.tsv, punct.tsv and numeral_rules.tsv from `dir`.
  static NormalizationTables load(const std::filesystem::path& dir);

  /// Adds a mapping table, resolving chains (a->b, b->c becomes a->c) so
  /// that no image is itself a key. Throws TableError on conflicts or cycles.
  void set_trad_to_simp(const std::vector<std::pair<char32_t, char32_t>>& pairs);
};

/// Parses one numeral rule line ("pattern<TAB>replacement").
NumeralRule parse_numeral_rule(std::string_view pattern, std::string_view replacement);

struct RawTranscript {
  std::string system_id;
  std::string text;
};

struct NormalizedTranscript {
  std::string system_id;
  std::string text;
  std::vector<Token> tokens;

  bool empty() const noexcept { return tokens.empty(); }
};

/// Runs the four passes in order: tag and punctuation removal, script
/// conversion, numeral rewriting, CJK/Latin spacing. Throws
/// unicode::DecodeError on malformed UTF-8. An empty result is returned as
/// is; callers decide whether to drop it.
NormalizedTranscript normalize(const RawTranscript& raw, const NormalizationTables& tables);
std::string normalize_text(std::string_view text, const NormalizationTables& tables);

std::vector<Token> tokenize(std::string_view text);
std::string detokenize(const std::vector<Token>& tokens);

/// Digit-by-digit reading ("2023" -> "二零二三").
std::u32string read_digits(std::u32string_view digits);
/// Positional reading ("105" -> "一百零五"). Falls back to digit-by-digit for
/// leading zeros or more than 16 digits.
std::u32string read_cardinal(std::u32string_view digits);

}  // namespace yuepipe::textnorm
