// Token-budget segmentation: equal chunking of chapter pairs for training
// export, greedy block packing of source chapters for decoding, and chapter
// reassembly from block translations.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ch2ch/corpus.hpp"
#include "ch2ch/sentences.hpp"
#include "ch2ch/tokens.hpp"

namespace ch2ch {

struct Chunk {
  std::string book;
  int chapter = 0;
  int ordinal = 0;
  // Half-open sentence index ranges into each side's sentence list. Ranges
  // may be empty when a side has fewer sentences than the chunk count.
  std::size_t src_begin = 0, src_end = 0;
  std::size_t tgt_begin = 0, tgt_end = 0;
  std::string src;  // materialized text (script-aware joiner)
  std::string tgt;
  long long src_tokens = 0;
  long long tgt_tokens = 0;
  bool flagged = false;  // an oversized sentence was hard-split inside
};

struct Block {
  std::string book;
  int chapter = 0;
  int ordinal = 0;
  std::size_t begin = 0, end = 0;  // sentence index range
  std::string src;
  long long src_tokens = 0;
  bool flagged = false;
};

struct ChunkOptions {
  long long budget = 2048;
  // 0 = derive the chunk count; otherwise force it (still validated against
  // the budget).
  std::size_t n_override = 0;
  // Split sentences that alone exceed the budget instead of erroring; the
  // affected chunks are flagged.
  bool hard_split = false;
};

// Join sentences the way the language writes them: single space between
// sentences for alphabetic scripts, nothing for CJK.
std::string join_sentences(const std::vector<std::string>& sentences,
                           std::size_t begin, std::size_t end,
                           const std::string& lang);

// Partition the chapter pair into n chunks, n = max over both sides of
// ceil(total/budget), raised if needed so a within-budget partition exists.
// Each side is split into n contiguous sentence groups minimizing the
// maximum group token mass; chunk k pairs group k of both sides.
std::vector<Chunk> chunk_equal(const ChapterPair& pair, const TokenCounter& counter,
                               const ChunkOptions& options = {});

// Greedy left-to-right packing: keep appending sentences while the block
// stays within budget. `lang` picks the joiner for materialized text.
std::vector<Block> pack_blocks(const std::vector<Sentence>& sentences,
                               const std::string& book, int chapter,
                               const std::string& lang, const TokenCounter& counter,
                               long long budget = 2048, bool hard_split = false);

struct MergedChapter {
  std::string text;
  // Byte span of each block's translation inside `text`, in ordinal order.
  std::vector<std::pair<std::size_t, std::size_t>> block_spans;
};

// Reassemble a chapter from (ordinal, translation) pairs. Ordinals must be
// exactly 0..k-1; the error names the first missing one.
MergedChapter merge_blocks(
    const std::vector<std::pair<int, std::string>>& translations,
    const std::string& tgt_lang);

// Manifest row format shared by chunks and blocks; blocks have no "tgt".
std::string chunk_to_json(const Chunk& chunk);
std::string block_to_json(const Block& block);
Chunk chunk_from_json(const std::string& line);
Block block_from_json(const std::string& line);

// Exposed for tests: minimal number of contiguous groups with per-group
// token mass ≤ cap, or SIZE_MAX when some single element exceeds cap.
std::size_t min_groups_under_cap(const std::vector<long long>& masses,
                                 long long cap);

}  // namespace ch2ch
