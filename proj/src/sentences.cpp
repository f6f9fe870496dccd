#include "ch2ch/sentences.hpp"

#include <array>
#include <cctype>
#include <set>

#include "ch2ch/error.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

namespace {

const std::set<std::string>& abbreviations() {
  // Lowercased, without the trailing period.
  static const std::set<std::string> kAbbrev = {
      "mr",  "mrs",  "ms",  "dr",   "prof", "st",  "jr",   "sr",
      "vs",  "etc",  "eg",  "ie",   "no",   "col", "gen",  "capt",
      "lt",  "sgt",  "rev", "hon",  "fig",  "vol", "pp",   "cf",
      "al",  "ca",   "approx", "dept", "univ", "inc", "ltd", "co",
      "corp"};
  return kAbbrev;
}

bool is_alpha_terminal(char32_t cp) {
  return cp == U'.' || cp == U'!' || cp == U'?';
}

bool is_cjk_terminal(char32_t cp) {
  return cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;  // 。 ！ ？
}

bool is_closing(char32_t cp) {
  switch (cp) {
    case U'"': case U'\'': case U')': case U']': case U'}':
    case 0x201D: case 0x2019:            // ” ’
    case 0x00BB:                         // »
    case 0x300D: case 0x300F:            // 」 』
    case 0x3009: case 0x300B:            // 〉 》
    case 0xFF09: case 0xFF3D:            // ） ］
      return true;
    default:
      return false;
  }
}

// Word made of letters immediately before code point index `i` (exclusive).
std::string word_before(const std::vector<CodePoint>& cps, std::size_t i,
                        std::string_view text) {
  std::size_t end = i;
  std::size_t start = i;
  while (start > 0) {
    char32_t cp = cps[start - 1].cp;
    bool letter = (cp < 0x80 && std::isalpha(static_cast<int>(cp))) != 0;
    if (!letter) break;
    --start;
  }
  if (start == end) return {};
  std::size_t b0 = cps[start].offset;
  std::size_t b1 = cps[end - 1].offset + cps[end - 1].size;
  return std::string(text.substr(b0, b1 - b0));
}

}  // namespace

std::vector<Sentence> split_sentences(std::string_view text,
                                      std::string_view lang) {
  const ScriptKind script = script_for_lang(lang);
  const std::vector<CodePoint> cps = decode_all(text);
  const std::size_t n = cps.size();

  std::vector<Sentence> out;
  std::size_t i = 0;

  auto skip_space = [&](std::size_t j) {
    while (j < n && is_space_cp(cps[j].cp)) ++j;
    return j;
  };

  auto emit = [&](std::size_t first, std::size_t last) {  // [first, last)
    while (first < last && is_space_cp(cps[first].cp)) ++first;
    while (last > first && is_space_cp(cps[last - 1].cp)) --last;
    if (first >= last) return;
    std::size_t b0 = cps[first].offset;
    std::size_t b1 = cps[last - 1].offset + cps[last - 1].size;
    out.push_back({std::string(text.substr(b0, b1 - b0)), b0, b1});
  };

  std::size_t start = skip_space(0);
  i = start;
  while (i < n) {
    char32_t cp = cps[i].cp;
    bool terminal = script == ScriptKind::Cjk ? is_cjk_terminal(cp)
                                              : is_alpha_terminal(cp);
    if (!terminal) {
      ++i;
      continue;
    }

    if (script == ScriptKind::Alphabetic && cp == U'.') {
      // Single period guards: decimals, abbreviations, single initials.
      bool lone_period = !(i + 1 < n && is_alpha_terminal(cps[i + 1].cp)) &&
                         !(i > 0 && is_alpha_terminal(cps[i - 1].cp));
      if (lone_period) {
        bool digit_before = i > 0 && is_ascii_digit(cps[i - 1].cp);
        bool digit_after = i + 1 < n && is_ascii_digit(cps[i + 1].cp);
        if (digit_before && digit_after) {
          ++i;
          continue;
        }
        std::string w = word_before(cps, i, text);
        if (!w.empty()) {
          bool single_initial =
              w.size() == 1 && std::isupper(static_cast<unsigned char>(w[0]));
          if (single_initial || abbreviations().count(to_lower_ascii(w))) {
            ++i;
            continue;
          }
        }
      }
    }

    // Consume the full terminal run ("?!", "...", "？！"), then closing
    // quotes/brackets, which belong to this sentence.
    std::size_t j = i;
    while (j < n && (script == ScriptKind::Cjk ? is_cjk_terminal(cps[j].cp)
                                               : is_alpha_terminal(cps[j].cp)))
      ++j;
    while (j < n && is_closing(cps[j].cp)) ++j;

    emit(start, j);
    start = skip_space(j);
    i = start;
  }
  emit(start, n);
  return out;
}

}  // namespace ch2ch
