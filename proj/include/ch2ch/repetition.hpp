// Sliding-window repetition detection over generated text: a rolling hash
// proposes window matches, literal comparison confirms them, and trimming
// truncates at the second occurrence of the first confirmed window.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ch2ch {

struct RepetitionEvent {
  std::size_t start_word_index = 0;  // second occurrence of the window
  std::size_t first_seen_index = 0;
  std::size_t window_len = 10;
  double relative_position = 0.0;  // start_word_index / total_words
};

struct RollingHashParams {
  // Polynomial base over per-word hashes, 64-bit wraparound arithmetic.
  std::uint64_t base = 1000003ULL;
  // Per-word hash. Tests substitute deliberately weak functions here to
  // prove the literal-comparison step gates every match.
  std::function<std::uint64_t(std::string_view)> word_hash;
};

// First confirmed repeated window, scanning second occurrences left to
// right (ties on the earlier occurrence broken toward the smallest index).
// Overlapping occurrences count: a short loop repeats within itself.
std::optional<RepetitionEvent> detect_repetition_words(
    const std::vector<std::string>& words, std::size_t window = 10,
    const RollingHashParams& hash = {});

// Same, on raw text. Words are whitespace tokens with CJK code points
// treated as width-1 words.
std::optional<RepetitionEvent> detect_repetition(const std::string& text,
                                                 std::size_t window = 10,
                                                 const RollingHashParams& hash = {});

// Truncates at the event's start word; without an event the text passes
// through byte-identical. A second pass is a no-op by construction.
std::pair<std::string, std::optional<RepetitionEvent>> trim_repetition(
    const std::string& text, std::size_t window = 10,
    const RollingHashParams& hash = {});

// One analyzed output; record_id keys the per-record CSV.
struct RepetitionSample {
  std::string record_id;
  long long input_tokens = 0;
  std::optional<RepetitionEvent> event;
};

struct LengthBucket {
  long long low = 0;
  long long high = -1;  // -1 = unbounded
  std::size_t n = 0;
  std::size_t repeated = 0;
  double ratio = 0.0;
};

struct RepetitionReport {
  std::size_t total = 0;
  std::size_t repeated = 0;
  double repetition_ratio = 0.0;
  // start_word_index histogram, fixed-width bins.
  std::size_t start_bin_width = 10;
  std::vector<std::size_t> start_histogram;
  // relative_position histogram over [0,1], ten bins, 1.0 in the last.
  std::vector<std::size_t> relative_histogram;
  std::vector<LengthBucket> buckets;
};

// Aggregates samples; bucket edges partition input token length into
// [0,e1), [e1,e2), ..., [ek,inf).
RepetitionReport repetition_stats(const std::vector<RepetitionSample>& samples,
                                  const std::vector<long long>& bucket_edges = {
                                      512, 1024, 2048});

// Plot-ready CSVs: one row per record / one row per length bucket.
std::string repetition_records_csv(const std::vector<RepetitionSample>& samples);
std::string repetition_buckets_csv(const RepetitionReport& report);

}  // namespace ch2ch
