#include "ch2ch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "json.hpp"

#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/sentences.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

namespace detail {
const std::vector<std::pair<std::string, std::string>>& default_lexicon_data();
}

// ---------------------------------------------------------------------------
// BLEU

std::vector<std::string> bleu_tokenize(const std::string& text, bool lowercase) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode_utf8(text, pos);
    if (is_space_cp(cp)) {
      flush();
      continue;
    }
    if (is_cjk_char(cp) || is_cjk_punct(cp) || is_punct_cp(cp)) {
      flush();
      tokens.push_back(text.substr(start, pos - start));
      continue;
    }
    current += text.substr(start, pos - start);
  }
  flush();
  if (lowercase) {
    for (auto& t : tokens) t = to_lower_ascii(t);
  }
  return tokens;
}

namespace {

// n-grams as '\x1f'-joined strings; the separator cannot occur in tokens
// (it is a control byte the cleaning stage strips).
void count_ngrams(const std::vector<std::string>& tokens, int n,
                  std::unordered_map<std::string, long long>& out) {
  if (tokens.size() < static_cast<std::size_t>(n)) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + k];
    }
    ++out[key];
  }
}

}  // namespace

BleuScore bleu_corpus(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references,
                      const BleuOptions& options) {
  if (hypotheses.size() != references.size()) {
    throw Error(ErrorKind::Validation,
                "hypothesis/reference count mismatch: " +
                    std::to_string(hypotheses.size()) + " vs " +
                    std::to_string(references.size()));
  }
  if (hypotheses.empty()) {
    throw Error(ErrorKind::Validation, "nothing to score");
  }
  if (options.max_n < 1) {
    throw Error(ErrorKind::Validation, "max_n must be >= 1");
  }

  const int N = options.max_n;
  std::vector<long long> matches(N, 0), hyp_totals(N, 0), ref_totals(N, 0);
  BleuScore score;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto hyp = bleu_tokenize(hypotheses[i], options.lowercase);
    const auto ref = bleu_tokenize(references[i], options.lowercase);
    if (ref.empty()) {
      throw Error(ErrorKind::Validation,
                  "reference " + std::to_string(i) + " is empty");
    }
    score.hyp_len += static_cast<long long>(hyp.size());
    score.ref_len += static_cast<long long>(ref.size());
    for (int n = 1; n <= N; ++n) {
      std::unordered_map<std::string, long long> hyp_counts, ref_counts;
      count_ngrams(hyp, n, hyp_counts);
      count_ngrams(ref, n, ref_counts);
      for (const auto& [gram, count] : hyp_counts) {
        hyp_totals[n - 1] += count;
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          matches[n - 1] += std::min(count, it->second);
        }
      }
      for (const auto& [gram, count] : ref_counts) ref_totals[n - 1] += count;
    }
  }

  score.precisions.assign(N, 0.0);
  double log_sum = 0.0;
  int orders_used = 0;
  bool zero_precision = false;
  for (int n = 0; n < N; ++n) {
    if (hyp_totals[n] == 0 && ref_totals[n] == 0) continue;  // too short to say
    ++orders_used;
    if (hyp_totals[n] == 0) {
      zero_precision = true;
      continue;
    }
    double p = static_cast<double>(matches[n]) /
               static_cast<double>(hyp_totals[n]);
    if (matches[n] == 0) {
      if (options.smoothing == BleuSmoothing::AddEps) {
        p = options.eps / static_cast<double>(hyp_totals[n]);
      } else {
        zero_precision = true;
      }
    }
    score.precisions[n] = static_cast<double>(matches[n]) /
                          std::max<double>(1.0, static_cast<double>(hyp_totals[n]));
    if (p > 0.0) log_sum += std::log(p);
  }

  if (score.hyp_len == 0) {
    score.brevity_penalty = 0.0;
    score.score = 0.0;
    return score;
  }
  score.brevity_penalty =
      score.hyp_len >= score.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(score.ref_len) /
                               static_cast<double>(score.hyp_len));
  if (zero_precision || orders_used == 0) {
    score.score = 0.0;
    return score;
  }
  score.score = 100.0 * score.brevity_penalty *
                std::exp(log_sum / static_cast<double>(orders_used));
  return score;
}

// ---------------------------------------------------------------------------
// Lexicons

Lexicons Lexicons::defaults() {
  Lexicons lex;
  for (const auto& [key, body] : detail::default_lexicon_data()) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      std::size_t nl = body.find('\n', pos);
      if (nl == std::string::npos) nl = body.size();
      std::string item = body.substr(pos, nl - pos);
      while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) {
        item.pop_back();
      }
      if (!item.empty()) items.push_back(std::move(item));
      pos = nl + 1;
    }
    lex.lists_[key] = std::move(items);
  }
  return lex;
}

void Lexicons::override_from_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io,
                "lexicon directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const std::string stem = file.stem().string();  // "<lang>.<list>"
    if (stem.find('.') == std::string::npos) continue;
    const std::string body = read_file(file);
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      std::size_t nl = body.find('\n', pos);
      if (nl == std::string::npos) nl = body.size();
      std::string item = body.substr(pos, nl - pos);
      while (!item.empty() &&
             (item.back() == '\r' || item.back() == ' ' || item.back() == '\t')) {
        item.pop_back();
      }
      if (!item.empty() && item[0] != '#') items.push_back(std::move(item));
      pos = nl + 1;
    }
    lists_[stem] = std::move(items);
  }
}

bool Lexicons::has(const std::string& lang, const std::string& list_name) const {
  return lists_.find(lang + "." + list_name) != lists_.end();
}

const std::vector<std::string>& Lexicons::list(const std::string& lang,
                                               const std::string& list_name) const {
  static const std::vector<std::string> empty;
  const auto it = lists_.find(lang + "." + list_name);
  return it == lists_.end() ? empty : it->second;
}

void Lexicons::set(const std::string& lang, const std::string& list_name,
                   std::vector<std::string> items) {
  lists_[lang + "." + list_name] = std::move(items);
}

// ---------------------------------------------------------------------------
// Category extraction

namespace {

bool is_word_cp(char32_t cp) {
  if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
      (cp >= '0' && cp <= '9')) {
    return true;
  }
  return cp >= 0x80 && !is_space_cp(cp) && !is_punct_cp(cp) &&
         !is_cjk_char(cp) && !is_cjk_punct(cp);
}

bool is_upper_cp(char32_t cp) {
  return (cp >= 'A' && cp <= 'Z') ||
         (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7);  // Latin-1 capitals
}

struct WordTok {
  std::string text;
  bool sentence_initial = false;
};

// Case-preserving word stream with sentence positions; apostrophes join
// when inside a word ("don't", "isn't").
std::vector<WordTok> words_in_sentences(const std::string& text,
                                        const std::string& lang) {
  std::vector<WordTok> out;
  for (const Sentence& sentence : split_sentences(text, lang)) {
    bool first = true;
    std::string current;
    auto flush = [&]() {
      while (!current.empty() &&
             (current.back() == '\'' ||
              (current.size() >= 3 &&
               current.compare(current.size() - 3, 3, "\xE2\x80\x99") == 0))) {
        if (current.back() == '\'') {
          current.pop_back();
        } else {
          current.resize(current.size() - 3);
        }
      }
      if (!current.empty()) {
        out.push_back({current, first});
        first = false;
        current.clear();
      }
    };
    std::size_t pos = 0;
    const std::string& s = sentence.text;
    while (pos < s.size()) {
      const std::size_t start = pos;
      const char32_t cp = decode_utf8(s, pos);
      const bool apostrophe = cp == '\'' || cp == 0x2019;
      if (is_word_cp(cp) || (apostrophe && !current.empty())) {
        current += s.substr(start, pos - start);
      } else {
        flush();
      }
    }
    flush();
  }
  return out;
}

bool word_capitalized(const std::string& word) {
  std::size_t pos = 0;
  return !word.empty() && is_upper_cp(decode_utf8(word, pos));
}

bool in_list(const std::vector<std::string>& list, const std::string& item) {
  return std::find(list.begin(), list.end(), item) != list.end();
}

// Non-overlapping longest-match scan for languages without word boundaries.
ItemCounts scan_substrings(const std::string& text,
                           const std::vector<std::string>& items) {
  std::vector<std::string> by_len = items;
  std::sort(by_len.begin(), by_len.end(),
            [](const std::string& a, const std::string& b) {
              return a.size() != b.size() ? a.size() > b.size() : a < b;
            });
  ItemCounts counts;
  std::size_t pos = 0;
  while (pos < text.size()) {
    bool matched = false;
    for (const std::string& item : by_len) {
      if (item.empty() || text.compare(pos, item.size(), item) != 0) continue;
      ++counts[item];
      pos += item.size();
      matched = true;
      break;
    }
    if (!matched) decode_utf8(text, pos);  // advance one code point
  }
  return counts;
}

const std::vector<std::string>& require_list(const Lexicons& lexicons,
                                             const std::string& lang,
                                             const std::string& name) {
  if (!lexicons.has(lang, name)) {
    throw Error(ErrorKind::Validation,
                "no \"" + name + "\" lexicon for language \"" + lang + "\"");
  }
  return lexicons.list(lang, name);
}

ItemCounts extract_pronouns(const std::string& text, const Lexicons& lexicons,
                            const std::string& lang) {
  const auto& list = require_list(lexicons, lang, "pronoun");
  if (script_for_lang(lang) == ScriptKind::Cjk) {
    return scan_substrings(text, list);
  }
  ItemCounts counts;
  for (const WordTok& w : words_in_sentences(text, lang)) {
    const std::string lower = to_lower_ascii(w.text);
    if (in_list(list, lower)) ++counts[lower];
  }
  return counts;
}

ItemCounts extract_discourse_markers(const std::string& text,
                                     const Lexicons& lexicons,
                                     const std::string& lang) {
  const auto& list = require_list(lexicons, lang, "discourse_marker");
  if (script_for_lang(lang) == ScriptKind::Cjk) {
    return scan_substrings(text, list);
  }
  // Phrase matching over the lowercased word sequence, longest match first.
  std::vector<std::vector<std::string>> phrases;
  for (const std::string& item : list) {
    std::vector<std::string> words;
    std::size_t pos = 0;
    while (pos < item.size()) {
      std::size_t space = item.find(' ', pos);
      if (space == std::string::npos) space = item.size();
      if (space > pos) words.push_back(item.substr(pos, space - pos));
      pos = space + 1;
    }
    if (!words.empty()) phrases.push_back(std::move(words));
  }
  std::sort(phrases.begin(), phrases.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });

  std::vector<std::string> words;
  for (const WordTok& w : words_in_sentences(text, lang)) {
    words.push_back(to_lower_ascii(w.text));
  }
  ItemCounts counts;
  std::size_t i = 0;
  while (i < words.size()) {
    bool matched = false;
    for (const auto& phrase : phrases) {
      if (i + phrase.size() > words.size()) continue;
      bool eq = true;
      for (std::size_t k = 0; k < phrase.size(); ++k) {
        if (words[i + k] != phrase[k]) {
          eq = false;
          break;
        }
      }
      if (!eq) continue;
      std::string item = phrase[0];
      for (std::size_t k = 1; k < phrase.size(); ++k) item += " " + phrase[k];
      ++counts[item];
      i += phrase.size();
      matched = true;
      break;
    }
    if (!matched) ++i;
  }
  return counts;
}

ItemCounts extract_tense(const std::string& text, const Lexicons& lexicons,
                         const std::string& lang) {
  if (script_for_lang(lang) == ScriptKind::Cjk) {
    return scan_substrings(text, require_list(lexicons, lang, "tense"));
  }
  const auto& past = require_list(lexicons, lang, "tense_past");
  const auto& present = require_list(lexicons, lang, "tense_present");
  const auto& ed_stop = lexicons.list(lang, "tense_ed_stop");
  const auto& s_stop = lexicons.list(lang, "tense_s_stop");
  const auto& pronouns = lexicons.list(lang, "pronoun");

  ItemCounts counts;
  for (const WordTok& w : words_in_sentences(text, lang)) {
    const std::string lower = to_lower_ascii(w.text);
    if (in_list(past, lower)) {
      ++counts[lower];
      continue;
    }
    if (lower.size() >= 4 && lower.compare(lower.size() - 2, 2, "ed") == 0 &&
        !in_list(ed_stop, lower)) {
      ++counts[lower];
      continue;
    }
    if (in_list(present, lower)) {
      ++counts[lower];
      continue;
    }
    // Third-person -s heuristic; skips mid-sentence capitalized words,
    // which are very likely proper nouns.
    const bool s_form =
        lower.size() >= 3 && lower.back() == 's' &&
        lower.compare(lower.size() - 2, 2, "ss") != 0 &&
        !in_list(s_stop, lower) && !in_list(pronouns, lower) &&
        (!word_capitalized(w.text) || w.sentence_initial);
    if (s_form) ++counts[lower];
  }
  return counts;
}

ItemCounts extract_entities(const std::string& text, const Lexicons& lexicons,
                            const std::string& lang) {
  ItemCounts counts;
  const auto& stop = lexicons.list(lang, "entity_stop");
  if (script_for_lang(lang) == ScriptKind::Cjk) {
    // No capitalization signal: count capitalized Latin runs and titles
    // quoted with CJK book brackets.
    std::size_t pos = 0;
    while ((pos = text.find("\xE3\x80\x8A", pos)) != std::string::npos) {  // 《
      const std::size_t close = text.find("\xE3\x80\x8B", pos + 3);        // 》
      if (close == std::string::npos) break;
      ++counts[text.substr(pos + 3, close - pos - 3)];
      pos = close + 3;
    }
    std::vector<std::string> run;
    auto close_latin_run = [&]() {
      if (run.empty()) return;
      std::string item = run[0];
      for (std::size_t k = 1; k < run.size(); ++k) item += " " + run[k];
      ++counts[item];
      run.clear();
    };
    for (const WordTok& w : words_in_sentences(text, lang)) {
      // A run never spans a sentence boundary.
      if (w.sentence_initial) close_latin_run();
      if (word_capitalized(w.text)) {
        run.push_back(w.text);
        continue;
      }
      close_latin_run();
    }
    close_latin_run();
    return counts;
  }

  std::vector<std::string> run;
  auto close_run = [&]() {
    if (run.empty()) return;
    if (run.size() == 1 && in_list(stop, to_lower_ascii(run[0]))) {
      run.clear();
      return;  // "I", lone "The": capitalization carries no signal
    }
    std::string item = run[0];
    for (std::size_t k = 1; k < run.size(); ++k) item += " " + run[k];
    ++counts[item];
    run.clear();
  };
  for (const WordTok& w : words_in_sentences(text, lang)) {
    // A run never spans a sentence boundary.
    if (w.sentence_initial) close_run();
    if (!word_capitalized(w.text)) {
      close_run();
      continue;
    }
    if (run.empty() && w.sentence_initial &&
        in_list(stop, to_lower_ascii(w.text))) {
      continue;  // sentence-initial common word
    }
    run.push_back(w.text);
  }
  close_run();
  return counts;
}

}  // namespace

const std::vector<std::string>& blonde_categories() {
  static const std::vector<std::string> categories = {
      "pronoun", "entity", "tense", "discourse_marker"};
  return categories;
}

ItemCounts extract_category_items(const std::string& text,
                                  const std::string& category,
                                  const Lexicons& lexicons,
                                  const std::string& lang) {
  if (!lang_supported(lang)) {
    throw Error(ErrorKind::Validation, "unsupported language: " + std::string(lang));
  }
  if (category == "pronoun") return extract_pronouns(text, lexicons, lang);
  if (category == "entity") return extract_entities(text, lexicons, lang);
  if (category == "tense") return extract_tense(text, lexicons, lang);
  if (category == "discourse_marker") {
    return extract_discourse_markers(text, lexicons, lang);
  }
  throw Error(ErrorKind::Validation, "unknown category: " + category);
}

BlondeLiteScore blonde_lite(const std::vector<std::string>& hypothesis_chapters,
                            const std::vector<std::string>& reference_chapters,
                            const Lexicons& lexicons, const std::string& lang,
                            const std::map<std::string, double>& weights) {
  if (hypothesis_chapters.size() != reference_chapters.size()) {
    throw Error(ErrorKind::Validation,
                "hypothesis/reference chapter count mismatch");
  }
  if (hypothesis_chapters.empty()) {
    throw Error(ErrorKind::Validation, "nothing to score");
  }
  BlondeLiteScore score;
  for (const std::string& category : blonde_categories()) {
    CategoryScore& cs = score.categories[category];
    for (std::size_t i = 0; i < hypothesis_chapters.size(); ++i) {
      const ItemCounts hyp = extract_category_items(hypothesis_chapters[i],
                                                    category, lexicons, lang);
      const ItemCounts ref = extract_category_items(reference_chapters[i],
                                                    category, lexicons, lang);
      for (const auto& [item, count] : hyp) {
        cs.hyp_items += count;
        const auto it = ref.find(item);
        if (it != ref.end()) cs.matches += std::min(count, it->second);
      }
      for (const auto& [item, count] : ref) cs.ref_items += count;
    }
    cs.precision = cs.hyp_items == 0 ? 0.0
                                     : static_cast<double>(cs.matches) /
                                           static_cast<double>(cs.hyp_items);
    cs.recall = cs.ref_items == 0 ? 0.0
                                  : static_cast<double>(cs.matches) /
                                        static_cast<double>(cs.ref_items);
    cs.f1 = cs.precision + cs.recall == 0.0
                ? 0.0
                : 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall);
  }
  double weight_sum = 0.0, weighted = 0.0;
  for (const auto& [category, cs] : score.categories) {
    if (cs.ref_items == 0) continue;  // nothing to recall; skip from "all"
    const auto it = weights.find(category);
    const double w = it == weights.end() ? 1.0 : it->second;
    if (w < 0.0) {
      throw Error(ErrorKind::Validation, "negative weight for " + category);
    }
    weight_sum += w;
    weighted += w * cs.f1;
  }
  score.all = weight_sum == 0.0 ? 0.0 : weighted / weight_sum;
  return score;
}

// ---------------------------------------------------------------------------
// EvalReport

EvalReport evaluate(const std::vector<ChapterPair>& references,
                    const std::map<ChapterKey, std::string>& merged_hypotheses,
                    const RepetitionReport& repetition, const Lexicons& lexicons,
                    const RunMeta& run, const BleuOptions& bleu_options) {
  if (references.empty()) {
    throw Error(ErrorKind::Validation, "no reference chapters to evaluate");
  }
  std::set<ChapterKey> seen;
  std::vector<std::string> hyps, refs;
  hyps.reserve(references.size());
  refs.reserve(references.size());
  const std::string lang = references.front().tgt_lang;
  for (const ChapterPair& pair : references) {
    if (pair.tgt_lang != lang) {
      throw Error(ErrorKind::Validation,
                  "mixed target languages in the evaluation slice");
    }
    const ChapterKey key{pair.book, pair.index};
    if (!seen.insert(key).second) {
      throw Error(ErrorKind::Validation,
                  "duplicate chapter in references: " + pair.book + " #" +
                      std::to_string(pair.index));
    }
    const auto it = merged_hypotheses.find(key);
    if (it == merged_hypotheses.end()) {
      throw Error(ErrorKind::Validation,
                  "missing hypothesis for " + pair.book + " #" +
                      std::to_string(pair.index));
    }
    hyps.push_back(it->second);
    refs.push_back(pair.target);
  }
  if (merged_hypotheses.size() != references.size()) {
    throw Error(ErrorKind::Validation,
                "hypotheses cover chapters absent from the reference slice");
  }

  EvalReport report;
  report.bleu = bleu_corpus(hyps, refs, bleu_options);
  report.blonde = blonde_lite(hyps, refs, lexicons, lang);
  report.repetition_ratio = repetition.repetition_ratio;
  report.run = run;
  for (std::size_t i = 0; i < references.size(); ++i) {
    ChapterRow row;
    row.book = references[i].book;
    row.chapter = references[i].index;
    const BleuScore chapter_bleu =
        bleu_corpus({hyps[i]}, {refs[i]}, bleu_options);
    row.bleu = chapter_bleu.score;
    row.hyp_len = chapter_bleu.hyp_len;
    row.ref_len = chapter_bleu.ref_len;
    report.chapters.push_back(std::move(row));
  }
  return report;
}

namespace {

const std::map<std::string, std::string>& category_short_names() {
  static const std::map<std::string, std::string> names = {
      {"pronoun", "pron"},
      {"entity", "entity"},
      {"tense", "tense"},
      {"discourse_marker", "dm"}};
  return names;
}

}  // namespace

std::string eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["bleu"] = report.bleu.score;
  j["bleu_detail"] = {{"precisions", report.bleu.precisions},
                      {"brevity_penalty", report.bleu.brevity_penalty},
                      {"hyp_len", report.bleu.hyp_len},
                      {"ref_len", report.bleu.ref_len}};
  nlohmann::json blonde;
  blonde["all"] = report.blonde.all;
  nlohmann::json detail;
  for (const auto& [category, cs] : report.blonde.categories) {
    blonde[category_short_names().at(category)] = cs.f1;
    detail[category] = {{"precision", cs.precision}, {"recall", cs.recall},
                        {"f1", cs.f1},               {"hyp_items", cs.hyp_items},
                        {"ref_items", cs.ref_items}, {"matches", cs.matches}};
  }
  blonde["detail"] = detail;
  j["blonde_lite"] = blonde;
  j["comet"] = nullptr;  // reserved for external neural-metric tooling
  j["repetition_ratio"] = report.repetition_ratio;
  nlohmann::json chapters = nlohmann::json::array();
  for (const ChapterRow& row : report.chapters) {
    chapters.push_back({{"book", row.book},
                        {"chapter", row.chapter},
                        {"bleu", row.bleu},
                        {"hyp_len", row.hyp_len},
                        {"ref_len", row.ref_len}});
  }
  j["chapters"] = chapters;
  nlohmann::json runj;
  runj["params"] = nlohmann::json::parse(decoding_params_to_json(report.run.params));
  runj["backend"] = {{"base_url", report.run.backend_url},
                     {"mode", report.run.backend_mode}};
  runj["budget"] = report.run.budget;
  runj["seed"] = report.run.seed;
  j["run"] = runj;
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("invalid eval report JSON: ") + e.what());
  }
  EvalReport report;
  try {
    report.bleu.score = j.at("bleu").get<double>();
    const auto& bd = j.at("bleu_detail");
    report.bleu.precisions = bd.at("precisions").get<std::vector<double>>();
    report.bleu.brevity_penalty = bd.at("brevity_penalty").get<double>();
    report.bleu.hyp_len = bd.at("hyp_len").get<long long>();
    report.bleu.ref_len = bd.at("ref_len").get<long long>();
    const auto& blonde = j.at("blonde_lite");
    report.blonde.all = blonde.at("all").get<double>();
    const auto& detail = blonde.at("detail");
    for (const auto& category : blonde_categories()) {
      if (!detail.contains(category)) continue;
      const auto& d = detail.at(category);
      CategoryScore cs;
      cs.precision = d.at("precision").get<double>();
      cs.recall = d.at("recall").get<double>();
      cs.f1 = d.at("f1").get<double>();
      cs.hyp_items = d.at("hyp_items").get<long long>();
      cs.ref_items = d.at("ref_items").get<long long>();
      cs.matches = d.at("matches").get<long long>();
      report.blonde.categories[category] = cs;
    }
    report.repetition_ratio = j.at("repetition_ratio").get<double>();
    for (const auto& row : j.at("chapters")) {
      ChapterRow r;
      r.book = row.at("book").get<std::string>();
      r.chapter = row.at("chapter").get<int>();
      r.bleu = row.at("bleu").get<double>();
      r.hyp_len = row.at("hyp_len").get<long long>();
      r.ref_len = row.at("ref_len").get<long long>();
      report.chapters.push_back(std::move(r));
    }
    const auto& runj = j.at("run");
    report.run.params = decoding_params_from_json(runj.at("params").dump());
    report.run.backend_url = runj.at("backend").at("base_url").get<std::string>();
    report.run.backend_mode = runj.at("backend").at("mode").get<std::string>();
    report.run.budget = runj.at("budget").get<long long>();
    report.run.seed = runj.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("eval report is missing fields: ") + e.what());
  }
  return report;
}

std::string chapters_csv(const EvalReport& report) {
  std::string out = "book,chapter,bleu,hyp_len,ref_len\n";
  for (const ChapterRow& row : report.chapters) {
    out += csv_row({row.book, std::to_string(row.chapter),
                    format_double(row.bleu, 4), std::to_string(row.hyp_len),
                    std::to_string(row.ref_len)});
  }
  return out;
}

}  // namespace ch2ch
