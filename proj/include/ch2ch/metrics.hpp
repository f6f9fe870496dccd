// Chapter-level evaluation: corpus BLEU with clipped n-gram precisions and
// brevity penalty, plus blonde_lite — a deterministic, lexicon-based
// approximation of the four BlonDe category columns. blonde_lite scores are
// NOT comparable with the official BlonDe implementation and are labeled
// accordingly in every output.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ch2ch/backend.hpp"
#include "ch2ch/corpus.hpp"
#include "ch2ch/repetition.hpp"

namespace ch2ch {

// Frozen tokenization: split on whitespace; every punctuation code point is
// its own token; every CJK code point is its own token; anything else
// accumulates into word tokens. Applied identically to both sides.
std::vector<std::string> bleu_tokenize(const std::string& text,
                                       bool lowercase = false);

enum class BleuSmoothing { None, AddEps };

struct BleuOptions {
  int max_n = 4;
  BleuSmoothing smoothing = BleuSmoothing::None;
  bool lowercase = false;
  double eps = 0.1;  // numerator substitute for zero-match orders (AddEps)
};

struct BleuScore {
  double score = 0.0;  // 0..100
  std::vector<double> precisions;
  double brevity_penalty = 1.0;
  long long hyp_len = 0;
  long long ref_len = 0;
};

// Corpus-level BLEU (sums of clipped matches, not averaged per-sentence
// scores). Orders with no n-grams on either side are dropped from the
// geometric mean so identity scores 100 even on very short corpora.
BleuScore bleu_corpus(const std::vector<std::string>& hypotheses,
                      const std::vector<std::string>& references,
                      const BleuOptions& options = {});

// ---------------------------------------------------------------------------
// blonde_lite

// Named word/phrase lists keyed "lang.list", e.g. "en.pronoun". Defaults
// ship for en and zh; a directory of <lang>.<list>.txt files overrides.
class Lexicons {
 public:
  static Lexicons defaults();
  void override_from_dir(const std::filesystem::path& dir);
  bool has(const std::string& lang, const std::string& list_name) const;
  const std::vector<std::string>& list(const std::string& lang,
                                       const std::string& list_name) const;
  void set(const std::string& lang, const std::string& list_name,
           std::vector<std::string> items);

 private:
  std::map<std::string, std::vector<std::string>> lists_;
};

using ItemCounts = std::map<std::string, long long>;

// Deterministic per-category extraction; see the README for the exact rules
// per category and script.
ItemCounts extract_category_items(const std::string& text,
                                  const std::string& category,
                                  const Lexicons& lexicons,
                                  const std::string& lang);

struct CategoryScore {
  long long hyp_items = 0;
  long long ref_items = 0;
  long long matches = 0;  // clipped per chapter, summed corpus-wide
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct BlondeLiteScore {
  // Keyed by category: pronoun, entity, tense, discourse_marker.
  std::map<std::string, CategoryScore> categories;
  double all = 0.0;  // weighted mean F1 over categories with ref items
};

const std::vector<std::string>& blonde_categories();

BlondeLiteScore blonde_lite(const std::vector<std::string>& hypothesis_chapters,
                            const std::vector<std::string>& reference_chapters,
                            const Lexicons& lexicons, const std::string& lang,
                            const std::map<std::string, double>& weights = {});

// ---------------------------------------------------------------------------
// Evaluation report

struct ChapterRow {
  std::string book;
  int chapter = 0;
  double bleu = 0.0;
  long long hyp_len = 0;
  long long ref_len = 0;
};

struct RunMeta {
  DecodingParams params;
  std::string backend_url;
  std::string backend_mode;
  long long budget = 2048;
  std::uint64_t seed = 0;
};

struct EvalReport {
  BleuScore bleu;
  BlondeLiteScore blonde;
  double repetition_ratio = 0.0;
  std::vector<ChapterRow> chapters;
  RunMeta run;
};

// Hypotheses keyed by (book, chapter); must cover the slice exactly.
EvalReport evaluate(const std::vector<ChapterPair>& references,
                    const std::map<ChapterKey, std::string>& merged_hypotheses,
                    const RepetitionReport& repetition, const Lexicons& lexicons,
                    const RunMeta& run, const BleuOptions& bleu_options = {});

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);
std::string chapters_csv(const EvalReport& report);

}  // namespace ch2ch
