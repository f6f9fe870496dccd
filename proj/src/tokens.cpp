#include "ch2ch/tokens.hpp"

#include "ch2ch/error.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

std::size_t WhitespaceCounter::count(std::string_view text) const {
  std::size_t n = 0;
  std::size_t pos = 0;
  bool in_token = false;
  while (pos < text.size()) {
    bool space = is_space_cp(decode_utf8(text, pos));
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

std::size_t CjkCounter::count(std::string_view text) const {
  std::size_t n = 0;
  std::size_t pos = 0;
  bool in_run = false;  // inside a non-CJK, non-space run
  while (pos < text.size()) {
    char32_t cp = decode_utf8(text, pos);
    if (is_space_cp(cp)) {
      in_run = false;
    } else if (is_cjk_char(cp) || is_cjk_punct(cp)) {
      ++n;
      in_run = false;
    } else {
      if (!in_run) ++n;
      in_run = true;
    }
  }
  return n;
}

std::vector<std::string> split_words_mixed(std::string_view text) {
  std::vector<std::string> words;
  std::string run;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!run.empty()) {
      words.push_back(run);
      run.clear();
    }
  };
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (is_space_cp(cp)) {
      flush();
    } else if (is_cjk_char(cp) || is_cjk_punct(cp)) {
      flush();
      words.emplace_back(text.substr(start, pos - start));
    } else {
      run.append(text.substr(start, pos - start));
    }
  }
  flush();
  return words;
}

namespace {

bool is_single_cjk(const std::string& word) {
  std::size_t pos = 0;
  char32_t cp = decode_utf8(word, pos);
  return pos == word.size() && (is_cjk_char(cp) || is_cjk_punct(cp));
}

}  // namespace

std::string join_words_mixed(const std::vector<std::string>& words,
                             std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end && i < words.size(); ++i) {
    if (i > begin && !is_single_cjk(words[i - 1]) && !is_single_cjk(words[i])) {
      out += ' ';
    }
    out += words[i];
  }
  return out;
}

std::unique_ptr<TokenCounter> make_counter(std::string_view name) {
  if (name == "whitespace") return std::make_unique<WhitespaceCounter>();
  if (name == "cjk" || name == "mixed" || name == "auto") {
    return std::make_unique<CjkCounter>();
  }
  throw Error(ErrorKind::Validation,
              "unknown token counter: " + std::string(name));
}

}  // namespace ch2ch
