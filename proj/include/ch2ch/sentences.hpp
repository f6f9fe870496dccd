#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ch2ch {

// A sentence with its byte extent in the parent chapter. Spans are ordered
// and non-overlapping; the bytes between consecutive spans (and before the
// first / after the last) are whitespace only, so the chapter text can be
// reconstructed from the spans exactly.
struct Sentence {
  std::string text;
  std::size_t begin = 0;  // byte offset into the chapter
  std::size_t end = 0;    // one past the last byte
};

// Rule-based splitter. Alphabetic languages split on . ! ? with closing
// quotes/brackets attached to the preceding sentence, guarded against a
// closed abbreviation list, single-initial periods and decimal points.
// CJK languages split on 。！？ with the same closing-attachment rule.
// Throws Error(Validation) for unsupported language codes.
std::vector<Sentence> split_sentences(std::string_view text,
                                      std::string_view lang);

}  // namespace ch2ch
