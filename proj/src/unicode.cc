#include "yuepipe/unicode.h"

#include <cstdio>
#include <cstdlib>

namespace yuepipe::unicode {

std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    const auto b0 = static_cast<unsigned char>(bytes[i]);
    if (b0 < 0x80) {
      out.push_back(b0);
      ++i;
      continue;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
      len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
      throw DecodeError("invalid UTF-8 lead byte at offset " + std::to_string(i), i);
    }
    if (i + len > n) throw DecodeError("truncated UTF-8 sequence at offset " + std::to_string(i), i);
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(bytes[i + k]);
      if ((b & 0xC0) != 0x80)
        throw DecodeError("invalid UTF-8 continuation byte at offset " + std::to_string(i + k), i + k);
      cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min) throw DecodeError("overlong UTF-8 sequence at offset " + std::to_string(i), i);
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      throw DecodeError("invalid codepoint in UTF-8 at offset " + std::to_string(i), i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size() * 3);
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

std::string codepoint_label(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "U+%04X", static_cast<unsigned>(cp));
  return buf;
}

char32_t parse_codepoint(std::string_view text) {
  std::string_view hex;
  if (text.size() > 2 && (text.substr(0, 2) == "U+" || text.substr(0, 2) == "u+" || text.substr(0, 2) == "0x"))
    hex = text.substr(2);
  if (!hex.empty()) {
    std::string h(hex);
    char* end = nullptr;
    const unsigned long v = std::strtoul(h.c_str(), &end, 16);
    if (end != h.c_str() + h.size() || v > 0x10FFFF) throw std::invalid_argument("bad codepoint: " + std::string(text));
    return static_cast<char32_t>(v);
  }
  const std::u32string cps = decode_utf8(text);
  if (cps.size() != 1) throw std::invalid_argument("expected one codepoint: " + std::string(text));
  return cps[0];
}

bool is_cjk(char32_t cp) noexcept {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0x20000 && cp <= 0x2A6DF) ||  // extension B
         (cp >= 0x2A700 && cp <= 0x2EBEF) ||  // extensions C-F
         (cp >= 0x2F800 && cp <= 0x2FA1F) ||  // compatibility supplement
         (cp >= 0x30000 && cp <= 0x3134F) ||  // extension G
         cp == 0x3007;                        // ideographic zero
}

bool is_space(char32_t cp) noexcept {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200B;
  }
}

char32_t fold_width(char32_t cp) noexcept {
  if (cp >= 0xFF01 && cp <= 0xFF5E) return cp - 0xFF01 + 0x21;
  if (cp == 0x3000) return U' ';
  if (cp == 0x2019 || cp == 0x2018 || cp == 0x02BC) return U'\'';
  return cp;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace yuepipe::unicode
