#include "ch2ch/segment.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "json.hpp"

#include "ch2ch/error.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

namespace {

// First ~60 code points of a sentence, for error messages.
std::string sentence_label(const std::string& text) {
  std::size_t pos = 0, cps = 0;
  while (pos < text.size() && cps < 60) {
    decode_utf8(text, pos);
    ++cps;
  }
  if (pos >= text.size()) return text;
  return text.substr(0, pos) + "...";
}

std::string side_joiner(const std::string& lang) {
  return script_for_lang(lang) == ScriptKind::Cjk ? std::string()
                                                  : std::string(" ");
}

struct SideSentence {
  std::string text;
  long long tokens = 0;
  bool from_hard_split = false;
};

// Split one oversized sentence at token boundaries into pieces ≤ budget.
std::vector<std::string> hard_split_sentence(const std::string& text,
                                             const TokenCounter& counter,
                                             long long budget) {
  const std::vector<std::string> words = split_words_mixed(text);
  std::vector<std::string> pieces;
  std::size_t begin = 0;
  while (begin < words.size()) {
    std::size_t end = begin + 1;
    std::string piece = join_words_mixed(words, begin, end);
    while (end < words.size()) {
      std::string candidate = join_words_mixed(words, begin, end + 1);
      if (counter.count(candidate) > static_cast<std::size_t>(budget)) break;
      piece = std::move(candidate);
      ++end;
    }
    pieces.push_back(std::move(piece));
    begin = end;
  }
  return pieces;
}

// Sentence texts with token counts; oversized sentences either error or
// are expanded into flagged pieces.
std::vector<SideSentence> prepare_side(const std::vector<std::string>& sentences,
                                       const TokenCounter& counter,
                                       long long budget, bool hard_split,
                                       const std::string& side) {
  std::vector<SideSentence> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const long long tokens = counter.count(sentences[i]);
    if (tokens <= budget) {
      out.push_back({sentences[i], tokens, false});
      continue;
    }
    if (!hard_split) {
      throw Error(ErrorKind::Validation,
                  "oversized " + side + " sentence " + std::to_string(i) +
                      " (" + std::to_string(tokens) + " tokens > budget " +
                      std::to_string(budget) + "): \"" +
                      sentence_label(sentences[i]) + "\"");
    }
    for (auto& piece : hard_split_sentence(sentences[i], counter, budget)) {
      const long long n = counter.count(piece);
      out.push_back({std::move(piece), n, true});
    }
  }
  return out;
}

using Range = std::pair<std::size_t, std::size_t>;

long long range_mass(const std::vector<long long>& masses, const Range& r) {
  long long sum = 0;
  for (std::size_t i = r.first; i < r.second; ++i) sum += masses[i];
  return sum;
}

// Greedy max-fill under cap; the resulting group count is minimal for that
// cap (exchange argument), which is what the binary search below relies on.
std::vector<Range> greedy_fill(const std::vector<long long>& masses,
                               long long cap) {
  std::vector<Range> groups;
  std::size_t begin = 0;
  long long cur = 0;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (i > begin && cur + masses[i] > cap) {
      groups.push_back({begin, i});
      begin = i;
      cur = 0;
    }
    cur += masses[i];
  }
  groups.push_back({begin, masses.size()});
  return groups;
}

}  // namespace

std::size_t min_groups_under_cap(const std::vector<long long>& masses,
                                 long long cap) {
  for (long long m : masses) {
    if (m > cap) return std::numeric_limits<std::size_t>::max();
  }
  if (masses.empty()) return 0;
  return greedy_fill(masses, cap).size();
}

namespace {

// Exactly k contiguous groups minimizing the maximum group mass: binary
// search the cap, greedy-fill at the optimum, then split the heaviest
// groups until k is reached (splitting never raises the maximum).
std::vector<Range> partition_minmax(const std::vector<long long>& masses,
                                    std::size_t k) {
  std::vector<Range> groups;
  if (masses.empty() || k == 0) return groups;
  const std::size_t k_eff = std::min(k, masses.size());
  long long lo = *std::max_element(masses.begin(), masses.end());
  long long hi = std::accumulate(masses.begin(), masses.end(), 0LL);
  while (lo < hi) {
    const long long mid = lo + (hi - lo) / 2;
    if (min_groups_under_cap(masses, mid) <= k_eff) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  groups = greedy_fill(masses, lo);
  if (groups.size() > k_eff) {
    throw Error(ErrorKind::Internal, "partition search produced too many groups");
  }
  while (groups.size() < k_eff) {
    // Heaviest splittable group, earliest on ties.
    std::size_t pick = groups.size();
    long long pick_mass = -1;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].second - groups[g].first < 2) continue;
      const long long m = range_mass(masses, groups[g]);
      if (m > pick_mass) {
        pick_mass = m;
        pick = g;
      }
    }
    if (pick == groups.size()) break;  // all singletons already
    const Range r = groups[pick];
    std::size_t best_at = r.first + 1;
    long long best = std::numeric_limits<long long>::max();
    long long left = 0;
    for (std::size_t cut = r.first + 1; cut < r.second; ++cut) {
      left += masses[cut - 1];
      const long long right = range_mass(masses, {cut, r.second});
      const long long worst = std::max(left, right);
      if (worst < best) {
        best = worst;
        best_at = cut;
      }
    }
    groups[pick] = {r.first, best_at};
    groups.insert(groups.begin() + static_cast<std::ptrdiff_t>(pick) + 1,
                  {best_at, r.second});
  }
  // A side with fewer sentences than k contributes empty trailing groups.
  while (groups.size() < k) groups.push_back({masses.size(), masses.size()});
  return groups;
}

}  // namespace

std::string join_sentences(const std::vector<std::string>& sentences,
                           std::size_t begin, std::size_t end,
                           const std::string& lang) {
  const std::string joiner = side_joiner(lang);
  std::string out;
  for (std::size_t i = begin; i < end && i < sentences.size(); ++i) {
    if (i > begin) out += joiner;
    out += sentences[i];
  }
  return out;
}

std::vector<Chunk> chunk_equal(const ChapterPair& pair, const TokenCounter& counter,
                               const ChunkOptions& options) {
  if (options.budget <= 0) {
    throw Error(ErrorKind::Validation, "token budget must be positive");
  }
  const std::string where = pair.book + " chapter " + std::to_string(pair.index);
  const auto src_sents = split_sentences(pair.source, pair.src_lang);
  const auto tgt_sents = split_sentences(pair.target, pair.tgt_lang);
  if (src_sents.empty() || tgt_sents.empty()) {
    throw Error(ErrorKind::Validation,
                where + ": sentence splitting produced an empty side");
  }
  std::vector<std::string> src_texts, tgt_texts;
  for (const auto& s : src_sents) src_texts.push_back(s.text);
  for (const auto& t : tgt_sents) tgt_texts.push_back(t.text);

  const auto src = prepare_side(src_texts, counter, options.budget,
                                options.hard_split, "source");
  const auto tgt = prepare_side(tgt_texts, counter, options.budget,
                                options.hard_split, "target");

  std::vector<long long> src_masses, tgt_masses;
  std::vector<std::string> src_final, tgt_final;
  std::vector<char> src_flag, tgt_flag;
  for (const auto& s : src) {
    src_masses.push_back(s.tokens);
    src_final.push_back(s.text);
    src_flag.push_back(s.from_hard_split ? 1 : 0);
  }
  for (const auto& t : tgt) {
    tgt_masses.push_back(t.tokens);
    tgt_final.push_back(t.text);
    tgt_flag.push_back(t.from_hard_split ? 1 : 0);
  }

  const long long src_total =
      std::accumulate(src_masses.begin(), src_masses.end(), 0LL);
  const long long tgt_total =
      std::accumulate(tgt_masses.begin(), tgt_masses.end(), 0LL);
  auto ceil_div = [](long long a, long long b) {
    return static_cast<std::size_t>(std::max<long long>(1, (a + b - 1) / b));
  };
  std::size_t n = std::max(ceil_div(src_total, options.budget),
                           ceil_div(tgt_total, options.budget));
  // ceil(total/budget) groups are not always enough for contiguous
  // sentence-whole groups (e.g. masses 1025/1025/1025 at budget 2048 need
  // three); raise n to the smallest feasible count per side.
  const std::size_t g_src = min_groups_under_cap(src_masses, options.budget);
  const std::size_t g_tgt = min_groups_under_cap(tgt_masses, options.budget);
  constexpr std::size_t kNoFit = std::numeric_limits<std::size_t>::max();
  if (g_src != kNoFit) n = std::max(n, g_src);
  if (g_tgt != kNoFit) n = std::max(n, g_tgt);
  if (options.n_override > 0) {
    const std::size_t forced = options.n_override;
    if ((g_src != kNoFit && forced < g_src) ||
        (g_tgt != kNoFit && forced < g_tgt)) {
      throw Error(ErrorKind::Validation,
                  where + ": forced chunk count " + std::to_string(forced) +
                      " cannot satisfy the token budget");
    }
    n = forced;
  }

  const auto src_groups = partition_minmax(src_masses, n);
  const auto tgt_groups = partition_minmax(tgt_masses, n);

  std::vector<Chunk> chunks;
  chunks.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Chunk c;
    c.book = pair.book;
    c.chapter = pair.index;
    c.ordinal = static_cast<int>(k);
    c.src_begin = src_groups[k].first;
    c.src_end = src_groups[k].second;
    c.tgt_begin = tgt_groups[k].first;
    c.tgt_end = tgt_groups[k].second;
    c.src = join_sentences(src_final, c.src_begin, c.src_end, pair.src_lang);
    c.tgt = join_sentences(tgt_final, c.tgt_begin, c.tgt_end, pair.tgt_lang);
    c.src_tokens = counter.count(c.src);
    c.tgt_tokens = counter.count(c.tgt);
    for (std::size_t i = c.src_begin; i < c.src_end; ++i) {
      if (src_flag[i]) c.flagged = true;
    }
    for (std::size_t i = c.tgt_begin; i < c.tgt_end; ++i) {
      if (tgt_flag[i]) c.flagged = true;
    }
    // A hard split can leave single words over budget; keep those flagged
    // so the budget invariant stays checkable on unflagged chunks.
    if (c.src_tokens > options.budget || c.tgt_tokens > options.budget) {
      c.flagged = true;
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<Block> pack_blocks(const std::vector<Sentence>& sentences,
                               const std::string& book, int chapter,
                               const std::string& lang, const TokenCounter& counter,
                               long long budget, bool hard_split) {
  if (budget <= 0) {
    throw Error(ErrorKind::Validation, "token budget must be positive");
  }
  if (sentences.empty()) {
    throw Error(ErrorKind::Validation,
                book + " chapter " + std::to_string(chapter) +
                    ": no sentences to pack");
  }
  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto side = prepare_side(texts, counter, budget, hard_split, "source");

  const std::string joiner = side_joiner(lang);
  std::vector<Block> blocks;
  std::size_t i = 0;
  while (i < side.size()) {
    Block b;
    b.book = book;
    b.chapter = chapter;
    b.ordinal = static_cast<int>(blocks.size());
    b.begin = i;
    b.src = side[i].text;
    b.flagged = side[i].from_hard_split;
    std::size_t j = i + 1;
    // Counts are taken on the materialized text, so the budget applies to
    // exactly what will be sent to the backend.
    while (j < side.size()) {
      const std::string candidate = b.src + joiner + side[j].text;
      if (counter.count(candidate) > static_cast<std::size_t>(budget)) break;
      b.src = candidate;
      b.flagged = b.flagged || side[j].from_hard_split;
      ++j;
    }
    b.end = j;
    b.src_tokens = counter.count(b.src);
    if (b.src_tokens > budget) b.flagged = true;
    blocks.push_back(std::move(b));
    i = j;
  }
  return blocks;
}

MergedChapter merge_blocks(
    const std::vector<std::pair<int, std::string>>& translations,
    const std::string& tgt_lang) {
  if (translations.empty()) {
    throw Error(ErrorKind::Validation, "no block translations to merge");
  }
  std::vector<std::pair<int, std::string>> sorted = translations;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const int expected = static_cast<int>(i);
    if (sorted[i].first == expected) continue;
    if (sorted[i].first > expected) {
      throw Error(ErrorKind::Validation,
                  "missing block ordinal " + std::to_string(expected));
    }
    throw Error(ErrorKind::Validation,
                "duplicate block ordinal " + std::to_string(sorted[i].first));
  }
  const std::string joiner = side_joiner(tgt_lang);
  MergedChapter merged;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // An empty translation contributes nothing; joining around it would
    // leave a doubled separator in the merged chapter.
    if (!merged.text.empty() && !sorted[i].second.empty()) {
      merged.text += joiner;
    }
    const std::size_t begin = merged.text.size();
    merged.text += sorted[i].second;
    merged.block_spans.push_back({begin, merged.text.size()});
  }
  return merged;
}

std::string chunk_to_json(const Chunk& chunk) {
  nlohmann::json j;
  j["book"] = chunk.book;
  j["chapter"] = chunk.chapter;
  j["ordinal"] = chunk.ordinal;
  j["src"] = chunk.src;
  j["tgt"] = chunk.tgt;
  j["src_tokens"] = chunk.src_tokens;
  j["tgt_tokens"] = chunk.tgt_tokens;
  j["flagged"] = chunk.flagged;
  return j.dump();
}

std::string block_to_json(const Block& block) {
  nlohmann::json j;
  j["book"] = block.book;
  j["chapter"] = block.chapter;
  j["ordinal"] = block.ordinal;
  j["src"] = block.src;
  j["src_tokens"] = block.src_tokens;
  j["tgt_tokens"] = 0;
  j["flagged"] = block.flagged;
  return j.dump();
}

namespace {

nlohmann::json parse_manifest_line(const std::string& line, const char* what,
                                   std::initializer_list<const char*> keys) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string(what) + " manifest line is not valid JSON: " + e.what());
  }
  for (const char* key : keys) {
    if (!j.contains(key)) {
      throw Error(ErrorKind::Validation, std::string(what) +
                                             " manifest line is missing \"" +
                                             key + "\"");
    }
  }
  return j;
}

}  // namespace

Chunk chunk_from_json(const std::string& line) {
  const auto j = parse_manifest_line(
      line, "chunk",
      {"book", "chapter", "ordinal", "src", "tgt", "src_tokens", "tgt_tokens"});
  Chunk c;
  c.book = j.at("book").get<std::string>();
  c.chapter = j.at("chapter").get<int>();
  c.ordinal = j.at("ordinal").get<int>();
  c.src = j.at("src").get<std::string>();
  c.tgt = j.at("tgt").get<std::string>();
  c.src_tokens = j.at("src_tokens").get<long long>();
  c.tgt_tokens = j.at("tgt_tokens").get<long long>();
  c.flagged = j.value("flagged", false);
  return c;
}

Block block_from_json(const std::string& line) {
  const auto j = parse_manifest_line(
      line, "block", {"book", "chapter", "ordinal", "src", "src_tokens"});
  Block b;
  b.book = j.at("book").get<std::string>();
  b.chapter = j.at("chapter").get<int>();
  b.ordinal = j.at("ordinal").get<int>();
  b.src = j.at("src").get<std::string>();
  b.src_tokens = j.at("src_tokens").get<long long>();
  b.flagged = j.value("flagged", false);
  return b;
}

}  // namespace ch2ch
