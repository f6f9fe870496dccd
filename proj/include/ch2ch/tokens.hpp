// Pluggable token counting. Budgets elsewhere in the pipeline are expressed
// in whatever unit the active counter produces, so an external service can
// supply exact model-tokenizer counts while the built-in counters keep the
// core self-contained.

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace ch2ch {

class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::string name() const = 0;
  // Deterministic, count("") == 0, stateless (callable from parallel workers).
  virtual std::size_t count(std::string_view text) const = 0;
};

// Maximal runs of non-whitespace.
class WhitespaceCounter : public TokenCounter {
 public:
  std::string name() const override { return "whitespace"; }
  std::size_t count(std::string_view text) const override;
};

// One token per CJK code point plus one per whitespace-delimited run of
// non-CJK characters. On text without CJK characters this reduces to the
// whitespace count, which makes it a safe default for mixed corpora.
class CjkCounter : public TokenCounter {
 public:
  std::string name() const override { return "cjk"; }
  std::size_t count(std::string_view text) const override;
};

// Word segmentation used by the repetition detector: whitespace tokens, with
// each CJK code point split out as its own width-1 word.
std::vector<std::string> split_words_mixed(std::string_view text);

// Inverse-ish of split_words_mixed: a space goes between two adjacent words
// only when neither of them is a single CJK character.
std::string join_words_mixed(const std::vector<std::string>& words,
                             std::size_t begin, std::size_t end);

// "whitespace" or "cjk". Throws Error(Validation) on unknown names; the
// remote counter is constructed separately (it needs an endpoint).
std::unique_ptr<TokenCounter> make_counter(std::string_view name);

}  // namespace ch2ch
