#include "yuepipe/textnorm.h"

#include <fstream>
#include <map>

#include "yuepipe/unicode.h"

namespace yuepipe::textnorm {

using unicode::is_ascii_alnum;
using unicode::is_ascii_digit;
using unicode::is_ascii_letter;
using unicode::is_cjk;

std::string Token::key() const {
  return kind == TokenKind::kLatinWord ? unicode::ascii_lower(surface) : surface;
}

bool same_word(const Token& a, const Token& b) {
  if (a.kind != b.kind || a.surface.size() != b.surface.size()) return false;
  if (a.kind == TokenKind::kCjkChar) return a.surface == b.surface;
  return unicode::ascii_lower(a.surface) == unicode::ascii_lower(b.surface);
}

ClassificationError::ClassificationError(char32_t cp, std::size_t position)
    : std::runtime_error("unclassifiable codepoint " + unicode::codepoint_label(cp) + " at position " +
                         std::to_string(position)),
      cp_(cp),
      position_(position) {}

namespace {

struct TableLine {
  std::size_t number;
  std::vector<std::string> fields;
};

std::vector<TableLine> read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TableError("cannot open table " + path.string());
  std::vector<TableLine> lines;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    TableLine tl{number, {}};
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      tl.fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    lines.push_back(std::move(tl));
  }
  return lines;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.filename().string() + ":" + std::to_string(line) + ": ";
}

bool contains_digit(std::u32string_view s) {
  for (char32_t c : s)
    if (is_ascii_digit(c)) return true;
  return false;
}

constexpr char32_t kZeroDigit = U'零';
constexpr char32_t kDigitReadings[10] = {U'零', U'一', U'二', U'三', U'四', U'五', U'六', U'七', U'八', U'九'};

// Reading of a 1..9999 group, without leading-zero handling.
std::u32string read_group(int value) {
  static constexpr char32_t kPlace[4] = {U'千', U'百', U'十', 0};
  const int digits[4] = {value / 1000, value / 100 % 10, value / 10 % 10, value % 10};
  std::u32string out;
  bool started = false;
  bool gap = false;
  for (int p = 0; p < 4; ++p) {
    if (digits[p] == 0) {
      if (started) gap = true;
      continue;
    }
    if (gap) out.push_back(kZeroDigit);
    gap = false;
    out.push_back(kDigitReadings[digits[p]]);
    if (kPlace[p] != 0) out.push_back(kPlace[p]);
    started = true;
  }
  return out;
}

// Bracketed non-lexical tags such as [laughter] become a single space.
std::u32string strip_tags(const std::u32string& in) {
  std::u32string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char32_t c = in[i];
    if (c == U'[' || c == U'［') {
      const char32_t close = c == U'[' ? U']' : U'］';
      std::size_t j = i + 1;
      while (j < in.size() && in[j] != close && in[j] != U'[' && in[j] != U'［') ++j;
      if (j < in.size() && in[j] == close) {
        out.push_back(U' ');
        i = j;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

bool digit_run_glued_left(const std::u32string& s, std::size_t last_digit) {
  std::size_t k = last_digit;
  while (k > 0 && is_ascii_digit(s[k - 1])) --k;
  return k > 0 && is_ascii_letter(s[k - 1]);
}

bool word_internal(const std::u32string& s, std::size_t i) {
  return i > 0 && i + 1 < s.size() && is_ascii_alnum(s[i - 1]) && is_ascii_alnum(s[i + 1]);
}

std::u32string remove_symbols(const std::u32string& raw, const NormalizationTables& tables) {
  std::u32string s = strip_tags(raw);
  for (char32_t& c : s) c = unicode::fold_width(c);
  std::u32string out(s.size(), U' ');
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (tables.punct_class.count(c)) continue;
    if (is_cjk(c) || is_ascii_alnum(c)) {
      out[i] = c;
    } else if ((c == U'\'' || c == U'-') && word_internal(s, i)) {
      out[i] = c;
    } else if (c == U'%' && i > 0 && is_ascii_digit(s[i - 1]) && !digit_run_glued_left(s, i - 1)) {
      out[i] = c;
    }
  }
  return out;
}

void convert_script(std::u32string& s, const NormalizationTables& tables) {
  if (tables.trad_to_simp.empty()) return;
  for (char32_t& c : s) {
    const auto it = tables.trad_to_simp.find(c);
    if (it != tables.trad_to_simp.end()) c = it->second;
  }
}

std::u32string apply_rule(const std::u32string& s, const NumeralRule& rule) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t copied = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_ascii_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < s.size() && is_ascii_digit(s[end])) ++end;
    const bool glued = (i > 0 && is_ascii_letter(s[i - 1])) || (end < s.size() && is_ascii_letter(s[end]));
    const std::size_t p = rule.prefix.size();
    const std::size_t q = rule.suffix.size();
    const bool prefix_ok = i >= copied + p && s.compare(i - p, p, rule.prefix) == 0;
    const bool suffix_ok = end + q <= s.size() && s.compare(end, q, rule.suffix) == 0;
    if (!glued && prefix_ok && suffix_ok) {
      out.append(s, copied, i - p - copied);
      out += rule.out_prefix;
      const std::u32string_view digits(s.data() + i, end - i);
      out += rule.reading == NumeralRule::Reading::kDigits ? read_digits(digits) : read_cardinal(digits);
      out += rule.out_suffix;
      copied = end + q;
      i = copied;
    } else {
      i = end;
    }
  }
  out.append(s, copied, std::u32string::npos);
  return out;
}

void rewrite_numerals(std::u32string& s, const NormalizationTables& tables) {
  for (const NumeralRule& rule : tables.numeral_rules) s = apply_rule(s, rule);
  // Joiners and percent signs left stranded by the rewrite carry no text.
  std::u32string cleaned = s;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char32_t c = s[i];
    if (c == U'%' || ((c == U'\'' || c == U'-') && !word_internal(s, i))) cleaned[i] = U' ';
  }
  s = std::move(cleaned);
}

}  // namespace

std::u32string read_digits(std::u32string_view digits) {
  std::u32string out;
  out.reserve(digits.size());
  for (char32_t d : digits) out.push_back(kDigitReadings[d - U'0']);
  return out;
}

std::u32string read_cardinal(std::u32string_view digits) {
  if (digits.empty()) return {};
  if (digits.size() > 16 || (digits.size() > 1 && digits[0] == U'0')) return read_digits(digits);
  if (digits == U"0") return std::u32string(1, kZeroDigit);

  static constexpr char32_t kGroupUnit[4] = {0, U'万', U'亿', U'万'};
  const std::size_t groups = (digits.size() + 3) / 4;
  std::u32string out;
  bool pending_zero = false;
  std::size_t pos = 0;
  for (std::size_t g = groups; g-- > 0;) {
    const std::size_t width = digits.size() - pos - 4 * g;
    int value = 0;
    for (std::size_t k = 0; k < width; ++k) value = value * 10 + static_cast<int>(digits[pos + k] - U'0');
    pos += width;
    if (value == 0) {
      pending_zero = !out.empty();
      continue;
    }
    if (!out.empty() && (pending_zero || value < 1000)) out.push_back(kZeroDigit);
    pending_zero = false;
    out += read_group(value);
    if (kGroupUnit[g] != 0) out.push_back(kGroupUnit[g]);
  }
  // 一十 at the head is read 十 (十五, 十万).
  if (out.size() >= 2 && out[0] == U'一' && out[1] == U'十') out.erase(0, 1);
  return out;
}

NumeralRule parse_numeral_rule(std::string_view pattern, std::string_view replacement) {
  const std::u32string pat = unicode::decode_utf8(pattern);
  const std::u32string rep = unicode::decode_utf8(replacement);
  static const std::u32string kNumber = U"{N}";
  const std::size_t at = pat.find(kNumber);
  if (at == std::u32string::npos || pat.find(kNumber, at + 1) != std::u32string::npos)
    throw TableError("pattern must contain {N} exactly once");

  NumeralRule rule;
  rule.prefix = pat.substr(0, at);
  rule.suffix = pat.substr(at + kNumber.size());
  if (contains_digit(rule.prefix) || contains_digit(rule.suffix))
    throw TableError("pattern context must not contain digits");

  std::size_t slot = std::u32string::npos;
  std::size_t slot_len = 0;
  for (const auto& [name, reading] : {std::pair{std::u32string(U"{digits}"), NumeralRule::Reading::kDigits},
                                      std::pair{std::u32string(U"{cardinal}"), NumeralRule::Reading::kCardinal}}) {
    const std::size_t p = rep.find(name);
    if (p == std::u32string::npos) continue;
    if (slot != std::u32string::npos || rep.find(name, p + 1) != std::u32string::npos)
      throw TableError("replacement must contain exactly one reading placeholder");
    slot = p;
    slot_len = name.size();
    rule.reading = reading;
  }
  if (slot == std::u32string::npos) throw TableError("replacement needs {digits} or {cardinal}");
  rule.out_prefix = rep.substr(0, slot);
  rule.out_suffix = rep.substr(slot + slot_len);
  for (char32_t c : rule.out_prefix + rule.out_suffix)
    if (!is_cjk(c)) throw TableError("replacement text must be CJK, found " + unicode::codepoint_label(c));
  return rule;
}

void NormalizationTables::set_trad_to_simp(const std::vector<std::pair<char32_t, char32_t>>& pairs) {
  std::map<char32_t, char32_t> raw;
  for (const auto& [from, to] : pairs) {
    if (from == to) continue;
    const auto [it, inserted] = raw.emplace(from, to);
    if (!inserted && it->second != to)
      throw TableError("conflicting mapping for " + unicode::codepoint_label(from));
  }
  trad_to_simp.clear();
  for (const auto& [from, to] : raw) {
    char32_t image = to;
    std::size_t hops = 0;
    for (auto next = raw.find(image); next != raw.end(); next = raw.find(image)) {
      image = next->second;
      if (++hops > raw.size()) throw TableError("mapping cycle through " + unicode::codepoint_label(from));
    }
    if (image != from) trad_to_simp.emplace(from, image);
  }
}

NormalizationTables NormalizationTables::load(const std::filesystem::path& dir) {
  NormalizationTables tables;

  const auto trad_path = dir / "trad_simp.tsv";
  std::vector<std::pair<char32_t, char32_t>> pairs;
  for (const TableLine& line : read_table(trad_path)) {
    if (line.fields.size() < 2) throw TableError(where(trad_path, line.number) + "expected two fields");
    try {
      const char32_t from = unicode::parse_codepoint(line.fields[0]);
      const char32_t to = unicode::parse_codepoint(line.fields[1]);
      if (!is_cjk(from) || !is_cjk(to)) throw TableError("mapping must be CJK to CJK");
      pairs.emplace_back(from, to);
    } catch (const std::exception& e) {
      throw TableError(where(trad_path, line.number) + e.what());
    }
  }
  tables.set_trad_to_simp(pairs);

  const auto punct_path = dir / "punct.tsv";
  for (const TableLine& line : read_table(punct_path)) {
    const std::string& spec = line.fields[0];
    try {
      const std::size_t dash = spec.find('-', 1);
      char32_t lo, hi;
      if (dash != std::string::npos && spec.size() > 1) {
        lo = unicode::parse_codepoint(spec.substr(0, dash));
        hi = unicode::parse_codepoint(spec.substr(dash + 1));
      } else {
        lo = hi = unicode::parse_codepoint(spec);
      }
      if (hi < lo) throw TableError("empty range");
      for (char32_t c = lo; c <= hi; ++c) {
        if (is_cjk(c) || is_ascii_alnum(c)) throw TableError("punctuation class may not contain letters or ideographs");
        tables.punct_class.insert(c);
      }
    } catch (const std::exception& e) {
      throw TableError(where(punct_path, line.number) + e.what());
    }
  }

  const auto rules_path = dir / "numeral_rules.tsv";
  for (const TableLine& line : read_table(rules_path)) {
    if (line.fields.size() < 2) throw TableError(where(rules_path, line.number) + "expected pattern and replacement");
    try {
      tables.numeral_rules.push_back(parse_numeral_rule(line.fields[0], line.fields[1]));
    } catch (const std::exception& e) {
      throw TableError(where(rules_path, line.number) + e.what());
    }
  }
  return tables;
}

std::vector<Token> tokenize(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  std::vector<Token> tokens;
  std::string latin;
  auto flush = [&] {
    if (!latin.empty()) tokens.push_back({TokenKind::kLatinWord, std::move(latin)});
    latin.clear();
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (unicode::is_space(c)) {
      flush();
    } else if (is_cjk(c)) {
      flush();
      Token t{TokenKind::kCjkChar, {}};
      unicode::append_utf8(t.surface, c);
      tokens.push_back(std::move(t));
    } else if (is_ascii_alnum(c) || c == U'\'' || (c == U'-' && !latin.empty())) {
      latin.push_back(static_cast<char>(c));
    } else {
      throw ClassificationError(c, i);
    }
  }
  flush();
  return tokens;
}

std::string detokenize(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && (tokens[i].kind == TokenKind::kLatinWord || tokens[i - 1].kind == TokenKind::kLatinWord))
      out.push_back(' ');
    out += tokens[i].surface;
  }
  return out;
}

std::string normalize_text(std::string_view text, const NormalizationTables& tables) {
  std::u32string s = remove_symbols(unicode::decode_utf8(text), tables);
  convert_script(s, tables);
  rewrite_numerals(s, tables);
  return detokenize(tokenize(unicode::encode_utf8(s)));
}

NormalizedTranscript normalize(const RawTranscript& raw, const NormalizationTables& tables) {
  NormalizedTranscript out;
  out.system_id = raw.system_id;
  out.text = normalize_text(raw.text, tables);
  out.tokens = tokenize(out.text);
  return out;
}

}  // namespace yuepipe::textnorm
