// UTF-8 iteration and the code point classes the pipeline cares about
// (whitespace, CJK, punctuation, script of a language code).

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ch2ch {

constexpr char32_t kReplacementChar = 0xFFFD;

// Decodes the code point starting at byte offset `pos` and advances `pos`
// past it. Malformed bytes decode to U+FFFD and advance by one byte.
char32_t decode_utf8(std::string_view text, std::size_t& pos);

void encode_utf8(char32_t cp, std::string& out);

// One decoded code point with its byte extent in the source string.
struct CodePoint {
  char32_t cp;
  std::size_t offset;  // byte offset of the first byte
  std::size_t size;    // byte length of the encoding
};

std::vector<CodePoint> decode_all(std::string_view text);

bool is_space_cp(char32_t cp);
bool is_ascii_digit(char32_t cp);

// Han ideographs, kana, hangul. Excludes CJK punctuation.
bool is_cjk_char(char32_t cp);
// CJK Symbols and Punctuation block plus fullwidth/halfwidth forms.
bool is_cjk_punct(char32_t cp);
// ASCII punctuation plus the general-punctuation range and common Latin-1
// marks. Used by the metrics tokenizer.
bool is_punct_cp(char32_t cp);

enum class ScriptKind { Alphabetic, Cjk };

// Maps a BCP-47-ish language code (primary subtag) to the script class the
// splitter and counters use. Throws Error(Validation) for codes outside the
// supported set.
ScriptKind script_for_lang(std::string_view lang);
bool lang_supported(std::string_view lang);

// Code point count excluding whitespace; the length unit of the alignment
// cost model.
std::size_t visible_length(std::string_view text);

std::string to_lower_ascii(std::string_view text);

}  // namespace ch2ch
