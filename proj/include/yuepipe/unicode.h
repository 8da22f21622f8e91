#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace yuepipe::unicode {

/// Thrown on malformed UTF-8 (overlong forms, surrogates, truncation).
class DecodeError : public std::runtime_error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

/// "U+4E00" style label, used in error messages and table files.
std::string codepoint_label(char32_t cp);

/// Parses "U+XXXX", "0xXXXX" or a single literal character. Throws
/// std::invalid_argument on anything else.
char32_t parse_codepoint(std::string_view text);

bool is_cjk(char32_t cp) noexcept;
inline bool is_ascii_digit(char32_t cp) noexcept { return cp >= U'0' && cp <= U'9'; }
inline bool is_ascii_letter(char32_t cp) noexcept {
  return (cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z');
}
inline bool is_ascii_alnum(char32_t cp) noexcept { return is_ascii_digit(cp) || is_ascii_letter(cp); }
bool is_space(char32_t cp) noexcept;

/// Fullwidth ASCII variants and ideographic space folded to ASCII,
/// typographic apostrophes folded to U+0027. Other codepoints unchanged.
char32_t fold_width(char32_t cp) noexcept;

std::string ascii_lower(std::string_view s);

}  // namespace yuepipe::unicode
