#include "ch2ch/repetition.hpp"

#include <algorithm>
#include <unordered_map>

#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/tokens.hpp"

namespace ch2ch {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool windows_equal(const std::vector<std::string>& words, std::size_t a,
                   std::size_t b, std::size_t window) {
  for (std::size_t k = 0; k < window; ++k) {
    if (words[a + k] != words[b + k]) return false;
  }
  return true;
}

}  // namespace

std::optional<RepetitionEvent> detect_repetition_words(
    const std::vector<std::string>& words, std::size_t window,
    const RollingHashParams& hash) {
  if (window < 1) {
    throw Error(ErrorKind::Validation, "repetition window must be >= 1");
  }
  if (words.size() < window + 1) return std::nullopt;

  const std::uint64_t base = hash.base;
  std::vector<std::uint64_t> wh(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    wh[i] = hash.word_hash ? hash.word_hash(words[i]) : fnv1a(words[i]);
  }

  // base^(window-1) for the roll-off term; wraparound mod 2^64 is fine
  // because equality of full polynomials is all we use the hash for.
  std::uint64_t top = 1;
  for (std::size_t k = 1; k < window; ++k) top *= base;

  std::uint64_t h = 0;
  for (std::size_t k = 0; k < window; ++k) h = h * base + wh[k];

  // hash -> window start positions already scanned, in increasing order.
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
  const std::size_t n_windows = words.size() - window + 1;
  for (std::size_t j = 0; j < n_windows; ++j) {
    if (j > 0) h = (h - wh[j - 1] * top) * base + wh[j + window - 1];
    auto it = seen.find(h);
    if (it != seen.end()) {
      for (std::size_t i : it->second) {
        if (!windows_equal(words, i, j, window)) continue;  // hash collision
        RepetitionEvent ev;
        ev.start_word_index = j;
        ev.first_seen_index = i;
        ev.window_len = window;
        ev.relative_position =
            static_cast<double>(j) / static_cast<double>(words.size());
        return ev;
      }
    }
    seen[h].push_back(j);
  }
  return std::nullopt;
}

std::optional<RepetitionEvent> detect_repetition(const std::string& text,
                                                 std::size_t window,
                                                 const RollingHashParams& hash) {
  return detect_repetition_words(split_words_mixed(text), window, hash);
}

std::pair<std::string, std::optional<RepetitionEvent>> trim_repetition(
    const std::string& text, std::size_t window, const RollingHashParams& hash) {
  const auto words = split_words_mixed(text);
  const auto event = detect_repetition_words(words, window, hash);
  if (!event) return {text, std::nullopt};
  return {join_words_mixed(words, 0, event->start_word_index), event};
}

RepetitionReport repetition_stats(const std::vector<RepetitionSample>& samples,
                                  const std::vector<long long>& bucket_edges) {
  if (samples.empty()) {
    throw Error(ErrorKind::Validation, "no records to analyze for repetition");
  }
  for (std::size_t i = 0; i < bucket_edges.size(); ++i) {
    if (bucket_edges[i] <= 0 ||
        (i > 0 && bucket_edges[i] <= bucket_edges[i - 1])) {
      throw Error(ErrorKind::Validation,
                  "bucket edges must be positive and strictly increasing");
    }
  }

  RepetitionReport report;
  report.total = samples.size();
  report.relative_histogram.assign(10, 0);
  report.buckets.resize(bucket_edges.size() + 1);
  for (std::size_t b = 0; b <= bucket_edges.size(); ++b) {
    report.buckets[b].low = b == 0 ? 0 : bucket_edges[b - 1];
    report.buckets[b].high =
        b == bucket_edges.size() ? -1 : bucket_edges[b];
  }

  for (const RepetitionSample& s : samples) {
    std::size_t b = 0;
    while (b < bucket_edges.size() && s.input_tokens >= bucket_edges[b]) ++b;
    ++report.buckets[b].n;
    if (!s.event) continue;
    ++report.repeated;
    ++report.buckets[b].repeated;
    const std::size_t start_bin = s.event->start_word_index / report.start_bin_width;
    if (report.start_histogram.size() <= start_bin) {
      report.start_histogram.resize(start_bin + 1, 0);
    }
    ++report.start_histogram[start_bin];
    const double rel = std::clamp(s.event->relative_position, 0.0, 1.0);
    const std::size_t rel_bin =
        std::min<std::size_t>(9, static_cast<std::size_t>(rel * 10.0));
    ++report.relative_histogram[rel_bin];
  }
  report.repetition_ratio =
      static_cast<double>(report.repeated) / static_cast<double>(report.total);
  for (LengthBucket& bucket : report.buckets) {
    bucket.ratio = bucket.n == 0 ? 0.0
                                 : static_cast<double>(bucket.repeated) /
                                       static_cast<double>(bucket.n);
  }
  return report;
}

std::string repetition_records_csv(const std::vector<RepetitionSample>& samples) {
  std::string out =
      "record_id,input_tokens,has_repetition,start_word_index,"
      "relative_position\n";
  for (const RepetitionSample& s : samples) {
    out += csv_row({s.record_id, std::to_string(s.input_tokens),
                    s.event ? "1" : "0",
                    s.event ? std::to_string(s.event->start_word_index) : "",
                    s.event ? format_double(s.event->relative_position, 6) : ""});
  }
  return out;
}

std::string repetition_buckets_csv(const RepetitionReport& report) {
  std::string out = "bucket_low,bucket_high,n,repeated,ratio\n";
  for (const LengthBucket& b : report.buckets) {
    out += csv_row({std::to_string(b.low),
                    b.high < 0 ? "inf" : std::to_string(b.high),
                    std::to_string(b.n), std::to_string(b.repeated),
                    format_double(b.ratio, 6)});
  }
  return out;
}

}  // namespace ch2ch
