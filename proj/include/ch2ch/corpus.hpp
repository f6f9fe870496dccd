// Parallel-book corpus handling: ingestion from JSONL, cleaning rules,
// length-ratio filtering, train/valid/test splitting and corpus statistics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ch2ch/tokens.hpp"

namespace ch2ch {

struct ChapterPair {
  std::string book;       // short identifier, unique within a corpus
  int index = 0;          // chapter ordinal within the book
  std::string source;
  std::string target;
  std::string src_lang;
  std::string tgt_lang;
};

using ChapterKey = std::pair<std::string, int>;  // (book, chapter)

struct Provenance {
  std::string path;
  std::vector<std::string> rules_applied;
};

struct Corpus {
  std::vector<ChapterPair> pairs;  // ordered; no duplicate (book, index)
  Provenance provenance;
};

struct SplitAssignment {
  std::set<std::string> test_books;
  std::vector<ChapterKey> train;  // sorted
  std::vector<ChapterKey> valid;  // sorted
  std::uint64_t seed = 0;
};

struct SplitStats {
  std::size_t chapters = 0;
  std::size_t sentences_src = 0;
  std::size_t sentences_tgt = 0;
  std::size_t words_src = 0;
  std::size_t words_tgt = 0;
};

struct CorpusStats {
  SplitStats train, valid, test, total;
};

struct DroppedPair {
  std::string book;
  int index = 0;
  std::optional<double> ratio;  // empty for the empty-side case
  std::string reason;           // "ratio" or "empty-side"
};

struct CleaningReport {
  std::size_t pairs_in = 0;
  std::size_t pairs_out = 0;
  std::vector<DroppedPair> dropped;
  std::vector<std::string> rules_applied;
};

// --- operations ---------------------------------------------------------

// Reads the JSONL corpus format ({"book","chapter","src","tgt","src_lang",
// "tgt_lang"}) from a file, or from every *.jsonl file of a directory in
// lexicographic order. Malformed records raise Error(Validation) listing
// file and line numbers; duplicates and empty inputs are errors too.
Corpus ingest(const std::filesystem::path& path,
              const std::string& src_lang, const std::string& tgt_lang);

// Built-in cleaning rules, applied in the order given:
//   strip_control       drop control characters and zero-width marks
//   fold_punctuation    curly quotes/dashes/ellipsis and fullwidth ，；：（）
//                       to their ASCII forms (sentence terminals 。！？ kept)
//   fold_width_digits   fullwidth digits to ASCII digits
//   collapse_whitespace runs of Unicode whitespace to a single space, trimmed
const std::vector<std::string>& default_cleaning_rules();
std::string apply_cleaning_rule(std::string_view text, const std::string& rule);
ChapterPair normalize(const ChapterPair& pair,
                      const std::vector<std::string>& rules);

// Drops a pair iff max(src_tokens, tgt_tokens) / min(...) > threshold
// (strict), with each side counted by `counter`. A zero-token side is
// dropped with reason "empty-side". Conservation: |kept| + |dropped| =
// |input|.
std::pair<Corpus, CleaningReport> filter_by_ratio(const Corpus& corpus,
                                                  double threshold,
                                                  const TokenCounter& counter);

// Whole books go to test; remaining chapters are shuffled with the seeded
// RNG and split (1 - valid_fraction) / valid_fraction.
SplitAssignment split_dataset(const Corpus& corpus, std::size_t n_test_books,
                              double valid_fraction, std::uint64_t seed);

CorpusStats compute_stats(const Corpus& corpus, const SplitAssignment& split,
                          const TokenCounter& counter);

// --- serialization ------------------------------------------------------

std::string corpus_to_jsonl(const Corpus& corpus);
std::string split_to_json(const SplitAssignment& split);
SplitAssignment split_from_json(const std::string& text);
std::string stats_to_csv(const CorpusStats& stats);
std::string cleaning_report_to_json(const CleaningReport& report);

}  // namespace ch2ch
