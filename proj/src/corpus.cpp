#include "ch2ch/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/rng.hpp"
#include "ch2ch/sentences.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

namespace {

std::vector<std::filesystem::path> corpus_files(
    const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw Error(ErrorKind::Io, "no .jsonl files under " + path.string());
    }
    return files;
  }
  if (!std::filesystem::exists(path, ec)) {
    throw Error(ErrorKind::Io, "no such path: " + path.string());
  }
  return {path};
}

std::optional<std::string> record_problem(const json& doc) {
  if (!doc.is_object()) return "record is not an object";
  for (const char* key : {"book", "src", "tgt"}) {
    if (!doc.contains(key)) return std::string("missing field: ") + key;
    if (!doc[key].is_string()) return std::string("field not a string: ") + key;
  }
  if (!doc.contains("chapter")) return "missing field: chapter";
  if (!doc["chapter"].is_number_integer()) return "field not an integer: chapter";
  if (doc["book"].get<std::string>().empty()) return "empty book id";
  if (doc["src"].get<std::string>().empty()) return "empty src";
  if (doc["tgt"].get<std::string>().empty()) return "empty tgt";
  return std::nullopt;
}

}  // namespace

Corpus ingest(const std::filesystem::path& path, const std::string& src_lang,
              const std::string& tgt_lang) {
  Corpus corpus;
  corpus.provenance.path = path.string();
  std::map<ChapterKey, std::string> seen;  // key -> "file:line"
  std::vector<std::string> problems;

  for (const auto& file : corpus_files(path)) {
    read_jsonl(
        file,
        [&](std::size_t lineno, const json& doc) {
          std::string where = file.filename().string() + ":" +
                              std::to_string(lineno);
          if (auto problem = record_problem(doc)) {
            problems.push_back(where + ": " + *problem);
            return;
          }
          ChapterPair pair;
          pair.book = doc["book"].get<std::string>();
          pair.index = doc["chapter"].get<int>();
          pair.source = doc["src"].get<std::string>();
          pair.target = doc["tgt"].get<std::string>();
          pair.src_lang = doc.value("src_lang", src_lang);
          pair.tgt_lang = doc.value("tgt_lang", tgt_lang);
          ChapterKey key{pair.book, pair.index};
          auto [it, inserted] = seen.emplace(key, where);
          if (!inserted) {
            problems.push_back(where + ": duplicate (book, chapter) also at " +
                               it->second);
            return;
          }
          corpus.pairs.push_back(std::move(pair));
        },
        [&](std::size_t lineno, const std::string& err) {
          problems.push_back(file.filename().string() + ":" +
                             std::to_string(lineno) + ": " + err);
        });
  }

  if (!problems.empty()) {
    std::string msg = "corpus has " + std::to_string(problems.size()) +
                      " malformed record(s):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw Error(ErrorKind::Validation, msg);
  }
  if (corpus.pairs.empty()) {
    throw Error(ErrorKind::Validation,
                "no valid records in " + path.string());
  }
  return corpus;
}

const std::vector<std::string>& default_cleaning_rules() {
  static const std::vector<std::string> kRules = {
      "strip_control", "fold_punctuation", "fold_width_digits",
      "collapse_whitespace"};
  return kRules;
}

namespace {

std::string strip_control(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    bool drop = (cp < 0x20 && cp != U'\t' && cp != U'\n' && cp != U'\r') ||
                cp == 0x7F || cp == 0x200B || cp == 0x200E || cp == 0x200F ||
                cp == 0xFEFF;
    if (!drop) out.append(text.substr(start, pos - start));
  }
  return out;
}

// ASCII replacements for quote/dash/ellipsis variants and the fullwidth
// pause punctuation. Sentence terminals 。！？ are deliberately left alone
// so the CJK splitter still sees them.
const char* fold_punct_target(char32_t cp) {
  switch (cp) {
    case 0x2018: case 0x2019: case 0x201A: case 0x201B: case 0x2032:
      return "'";
    case 0x201C: case 0x201D: case 0x201E: case 0x00AB: case 0x00BB:
    case 0x2033:
      return "\"";
    case 0x2013: case 0x2014: case 0x2015: case 0x2212:
      return "-";
    case 0x2026:
      return "...";
    case 0xFF0C: return ",";   // ，
    case 0xFF1B: return ";";   // ；
    case 0xFF1A: return ":";   // ：
    case 0xFF08: return "(";   // （
    case 0xFF09: return ")";   // ）
    default:
      return nullptr;
  }
}

std::string fold_punctuation(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (const char* repl = fold_punct_target(cp)) {
      out += repl;
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

std::string fold_width_digits(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (cp >= 0xFF10 && cp <= 0xFF19) {
      out.push_back(static_cast<char>('0' + (cp - 0xFF10)));
    } else {
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t start = pos;
    char32_t cp = decode_utf8(text, pos);
    if (is_space_cp(cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out += ' ';
      pending_space = false;
      out.append(text.substr(start, pos - start));
    }
  }
  return out;
}

}  // namespace

std::string apply_cleaning_rule(std::string_view text,
                                const std::string& rule) {
  if (rule == "strip_control") return strip_control(text);
  if (rule == "fold_punctuation") return fold_punctuation(text);
  if (rule == "fold_width_digits") return fold_width_digits(text);
  if (rule == "collapse_whitespace") return collapse_whitespace(text);
  throw Error(ErrorKind::Validation, "unknown cleaning rule: " + rule);
}

ChapterPair normalize(const ChapterPair& pair,
                      const std::vector<std::string>& rules) {
  ChapterPair out = pair;
  for (const auto& rule : rules) {
    out.source = apply_cleaning_rule(out.source, rule);
    out.target = apply_cleaning_rule(out.target, rule);
  }
  return out;
}

std::pair<Corpus, CleaningReport> filter_by_ratio(
    const Corpus& corpus, double threshold, const TokenCounter& counter) {
  if (threshold <= 1.0) {
    throw Error(ErrorKind::Validation, "ratio threshold must be > 1");
  }
  Corpus kept;
  kept.provenance = corpus.provenance;
  CleaningReport report;
  report.pairs_in = corpus.pairs.size();
  report.rules_applied = {"length-ratio>" + format_double(threshold, 2)};

  for (const auto& pair : corpus.pairs) {
    const auto src_tokens = counter.count(pair.source);
    const auto tgt_tokens = counter.count(pair.target);
    if (src_tokens == 0 || tgt_tokens == 0) {
      report.dropped.push_back({pair.book, pair.index, std::nullopt,
                                "empty-side"});
      continue;
    }
    const double hi = static_cast<double>(std::max(src_tokens, tgt_tokens));
    const double lo = static_cast<double>(std::min(src_tokens, tgt_tokens));
    const double ratio = hi / lo;
    if (ratio > threshold) {
      report.dropped.push_back({pair.book, pair.index, ratio, "ratio"});
    } else {
      kept.pairs.push_back(pair);
    }
  }
  report.pairs_out = kept.pairs.size();
  return {std::move(kept), std::move(report)};
}

SplitAssignment split_dataset(const Corpus& corpus, std::size_t n_test_books,
                              double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    throw Error(ErrorKind::Validation,
                "valid_fraction must be in (0, 1), got " +
                    format_double(valid_fraction, 4));
  }
  std::vector<std::string> books;
  for (const auto& pair : corpus.pairs) books.push_back(pair.book);
  std::sort(books.begin(), books.end());
  books.erase(std::unique(books.begin(), books.end()), books.end());
  if (n_test_books == 0 || n_test_books >= books.size()) {
    throw Error(ErrorKind::Validation,
                "n_test_books (" + std::to_string(n_test_books) +
                    ") must be in [1, book count) with book count " +
                    std::to_string(books.size()));
  }

  Rng rng(seed);
  SplitAssignment split;
  split.seed = seed;
  rng.shuffle(books);
  split.test_books.insert(books.begin(), books.begin() + n_test_books);

  std::vector<ChapterKey> remaining;
  for (const auto& pair : corpus.pairs) {
    if (!split.test_books.count(pair.book)) {
      remaining.emplace_back(pair.book, pair.index);
    }
  }
  std::sort(remaining.begin(), remaining.end());
  rng.shuffle(remaining);

  const auto n_valid = static_cast<std::size_t>(
      std::llround(valid_fraction * static_cast<double>(remaining.size())));
  split.valid.assign(remaining.begin(), remaining.begin() + n_valid);
  split.train.assign(remaining.begin() + n_valid, remaining.end());
  std::sort(split.valid.begin(), split.valid.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

CorpusStats compute_stats(const Corpus& corpus, const SplitAssignment& split,
                          const TokenCounter& counter) {
  std::set<ChapterKey> train(split.train.begin(), split.train.end());
  std::set<ChapterKey> valid(split.valid.begin(), split.valid.end());

  std::size_t covered = 0;
  CorpusStats stats;
  for (const auto& pair : corpus.pairs) {
    ChapterKey key{pair.book, pair.index};
    SplitStats* bucket = nullptr;
    if (split.test_books.count(pair.book)) bucket = &stats.test;
    else if (train.count(key)) bucket = &stats.train;
    else if (valid.count(key)) bucket = &stats.valid;
    if (!bucket) {
      throw Error(ErrorKind::Validation,
                  "split does not cover chapter (" + pair.book + ", " +
                      std::to_string(pair.index) + ")");
    }
    ++covered;
    bucket->chapters += 1;
    bucket->sentences_src += split_sentences(pair.source, pair.src_lang).size();
    bucket->sentences_tgt += split_sentences(pair.target, pair.tgt_lang).size();
    bucket->words_src += counter.count(pair.source);
    bucket->words_tgt += counter.count(pair.target);
  }
  // Test membership is implicit via books, so its count always matches;
  // a surplus in train/valid means the split names unknown chapters.
  if (train.size() + valid.size() + stats.test.chapters != covered) {
    throw Error(ErrorKind::Validation,
                "split references chapters absent from the corpus");
  }

  for (const SplitStats* s : {&stats.train, &stats.valid, &stats.test}) {
    stats.total.chapters += s->chapters;
    stats.total.sentences_src += s->sentences_src;
    stats.total.sentences_tgt += s->sentences_tgt;
    stats.total.words_src += s->words_src;
    stats.total.words_tgt += s->words_tgt;
  }
  return stats;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::vector<json> lines;
  lines.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) {
    lines.push_back(json{{"book", pair.book},
                         {"chapter", pair.index},
                         {"src", pair.source},
                         {"tgt", pair.target},
                         {"src_lang", pair.src_lang},
                         {"tgt_lang", pair.tgt_lang}});
  }
  return join_jsonl(lines);
}

std::string split_to_json(const SplitAssignment& split) {
  json doc;
  doc["test_books"] = split.test_books;
  json train = json::array();
  for (const auto& [book, chapter] : split.train) {
    train.push_back(json::array({book, chapter}));
  }
  json valid = json::array();
  for (const auto& [book, chapter] : split.valid) {
    valid.push_back(json::array({book, chapter}));
  }
  doc["train"] = std::move(train);
  doc["valid"] = std::move(valid);
  doc["seed"] = split.seed;
  return doc.dump() + "\n";
}

SplitAssignment split_from_json(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorKind::Io, "split file is not valid JSON");
  }
  SplitAssignment split;
  for (const auto& b : doc.at("test_books")) {
    split.test_books.insert(b.get<std::string>());
  }
  for (const auto& e : doc.at("train")) {
    split.train.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
  }
  for (const auto& e : doc.at("valid")) {
    split.valid.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
  }
  split.seed = doc.value("seed", 0ULL);
  return split;
}

std::string stats_to_csv(const CorpusStats& stats) {
  std::string out = csv_row({"split", "chapters", "sentences_src",
                             "sentences_tgt", "words_src", "words_tgt"});
  auto row = [&](const char* name, const SplitStats& s) {
    out += csv_row({name, std::to_string(s.chapters),
                    std::to_string(s.sentences_src),
                    std::to_string(s.sentences_tgt),
                    std::to_string(s.words_src),
                    std::to_string(s.words_tgt)});
  };
  row("train", stats.train);
  row("valid", stats.valid);
  row("test", stats.test);
  row("total", stats.total);
  return out;
}

std::string cleaning_report_to_json(const CleaningReport& report) {
  json doc;
  doc["pairs_in"] = report.pairs_in;
  doc["pairs_out"] = report.pairs_out;
  doc["rules_applied"] = report.rules_applied;
  json dropped = json::array();
  for (const auto& d : report.dropped) {
    json entry{{"book", d.book}, {"chapter", d.index}, {"reason", d.reason}};
    if (d.ratio) entry["ratio"] = *d.ratio;
    else entry["ratio"] = nullptr;
    dropped.push_back(std::move(entry));
  }
  doc["dropped"] = std::move(dropped);
  return doc.dump(2) + "\n";
}

}  // namespace ch2ch
