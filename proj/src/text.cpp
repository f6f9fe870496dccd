#include "ch2ch/text.hpp"

#include <algorithm>
#include <cctype>

#include "ch2ch/error.hpp"

namespace ch2ch {

char32_t decode_utf8(std::string_view text, std::size_t& pos) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  unsigned char b0 = bytes[pos];
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++pos;
    return kReplacementChar;
  }
  if (pos + len > n) {
    ++pos;
    return kReplacementChar;
  }
  for (int i = 1; i < len; ++i) {
    unsigned char b = bytes[pos + i];
    if ((b & 0xC0) != 0x80) {
      ++pos;
      return kReplacementChar;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  pos += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
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

std::vector<CodePoint> decode_all(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    out.push_back({cp, start, pos - start});
  }
  return out;
}

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x00A0:  // no-break space
    case 0x3000:  // ideographic space
    case 0x202F: case 0x205F:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

bool is_cjk_char(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // CJK Unified Ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // Extension A
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // Compatibility Ideographs
         (cp >= 0x3040 && cp <= 0x30FF) ||    // Hiragana, Katakana
         (cp >= 0xAC00 && cp <= 0xD7AF) ||    // Hangul Syllables
         (cp >= 0x20000 && cp <= 0x2FFFF);    // Extensions B..F
}

bool is_cjk_punct(char32_t cp) {
  return (cp >= 0x3001 && cp <= 0x303F) ||    // CJK Symbols and Punctuation
         (cp >= 0xFF00 && cp <= 0xFF0F) ||    // fullwidth forms, punctuation
         (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65) ||
         cp == 0x30FB;
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return std::ispunct(static_cast<int>(cp)) != 0;
  }
  if (cp >= 0x2010 && cp <= 0x2027) return true;   // dashes, quotes, ellipsis
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  switch (cp) {
    case 0x00A1: case 0x00BF:                      // inverted ! and ?
    case 0x00AB: case 0x00BB:                      // guillemets
    case 0x2212:                                   // minus sign
      return true;
    default:
      return is_cjk_punct(cp) || cp == 0x3002;     // ideographic full stop
  }
}

namespace {

std::string primary_subtag(std::string_view lang) {
  std::string out;
  for (char c : lang) {
    if (c == '-' || c == '_') break;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool is_cjk_lang(const std::string& tag) {
  return tag == "zh" || tag == "ja" || tag == "ko";
}

bool is_alpha_lang(const std::string& tag) {
  static const char* const kLangs[] = {"en", "de", "fr", "es", "it", "pt",
                                       "nl", "ru", "sv", "da", "pl", "cs",
                                       "ro", "tr", "hu", "fi"};
  return std::find(std::begin(kLangs), std::end(kLangs), tag) != std::end(kLangs);
}

}  // namespace

bool lang_supported(std::string_view lang) {
  std::string tag = primary_subtag(lang);
  return is_cjk_lang(tag) || is_alpha_lang(tag);
}

ScriptKind script_for_lang(std::string_view lang) {
  std::string tag = primary_subtag(lang);
  if (is_cjk_lang(tag)) return ScriptKind::Cjk;
  if (is_alpha_lang(tag)) return ScriptKind::Alphabetic;
  throw Error(ErrorKind::Validation,
              "unsupported language code: " + std::string(lang));
}

std::size_t visible_length(std::string_view text) {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!is_space_cp(decode_utf8(text, pos))) ++n;
  }
  return n;
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace ch2ch
