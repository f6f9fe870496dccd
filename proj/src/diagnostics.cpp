#include "ch2ch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/rng.hpp"
#include "ch2ch/sentences.hpp"
#include "ch2ch/text.hpp"

namespace ch2ch {

const char* bead_kind_name(BeadKind kind) {
  switch (kind) {
    case BeadKind::OneToOne: return "1-1";
    case BeadKind::Insert: return "insert";
    case BeadKind::Delete: return "delete";
    case BeadKind::Split: return "split";
    case BeadKind::Merge: return "merge";
  }
  return "?";
}

BeadArity bead_arity(BeadKind kind) {
  switch (kind) {
    case BeadKind::OneToOne: return {1, 1};
    case BeadKind::Insert: return {0, 1};
    case BeadKind::Delete: return {1, 0};
    case BeadKind::Split: return {1, 2};
    case BeadKind::Merge: return {2, 1};
  }
  return {0, 0};
}

double length_cost(double src_len, double tgt_len, const CostParams& params) {
  const double expected = params.mean_length_ratio * src_len;
  // Variance grows with total mass; the floor keeps tiny beads finite.
  const double scale = std::sqrt(std::max(1.0, expected + tgt_len));
  const double z = (tgt_len - expected) / scale / params.sigma;
  return 0.5 * z * z;
}

double bead_cost(BeadKind kind, double src_len, double tgt_len,
                 const CostParams& params) {
  switch (kind) {
    case BeadKind::OneToOne:
      return params.one_to_one_penalty + length_cost(src_len, tgt_len, params);
    case BeadKind::Insert:
    case BeadKind::Delete:
      return params.insert_delete_penalty;
    case BeadKind::Split:
    case BeadKind::Merge:
      return params.split_merge_penalty + length_cost(src_len, tgt_len, params);
  }
  return 0.0;
}

std::vector<Bead> align_lengths(const std::vector<double>& src_lengths,
                                const std::vector<double>& tgt_lengths,
                                const CostParams& params) {
  if (src_lengths.empty() || tgt_lengths.empty()) {
    throw Error(ErrorKind::Validation,
                "alignment requires at least one sentence on each side");
  }
  if (params.sigma <= 0.0) {
    throw Error(ErrorKind::Validation, "alignment sigma must be positive");
  }
  const std::size_t n = src_lengths.size();
  const std::size_t m = tgt_lengths.size();

  // Prefix sums so multi-sentence bead masses are O(1).
  std::vector<double> src_pre(n + 1, 0.0), tgt_pre(m + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) src_pre[i + 1] = src_pre[i] + src_lengths[i];
  for (std::size_t j = 0; j < m; ++j) tgt_pre[j + 1] = tgt_pre[j] + tgt_lengths[j];

  constexpr double kInf = std::numeric_limits<double>::infinity();
  struct Cell {
    double cost = kInf;
    BeadKind via = BeadKind::OneToOne;
    bool reached = false;
  };
  std::vector<Cell> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cell& { return dp[i * (m + 1) + j]; };
  at(0, 0).cost = 0.0;
  at(0, 0).reached = true;

  constexpr BeadKind kKinds[] = {BeadKind::OneToOne, BeadKind::Insert,
                                 BeadKind::Delete, BeadKind::Split,
                                 BeadKind::Merge};
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (i == 0 && j == 0) continue;
      Cell& cell = at(i, j);
      for (BeadKind kind : kKinds) {
        const BeadArity ar = bead_arity(kind);
        if (i < static_cast<std::size_t>(ar.src) ||
            j < static_cast<std::size_t>(ar.tgt)) {
          continue;
        }
        const Cell& prev = at(i - ar.src, j - ar.tgt);
        if (!prev.reached) continue;
        const double s = src_pre[i] - src_pre[i - ar.src];
        const double t = tgt_pre[j] - tgt_pre[j - ar.tgt];
        const double c = prev.cost + bead_cost(kind, s, t, params);
        // Strict < keeps the earliest kind in enumeration order on ties,
        // which makes the result deterministic.
        if (c < cell.cost) {
          cell.cost = c;
          cell.via = kind;
          cell.reached = true;
        }
      }
    }
  }

  if (!at(n, m).reached) {
    throw Error(ErrorKind::Internal, "alignment DP failed to reach the corner");
  }

  std::vector<Bead> beads;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cell& cell = at(i, j);
    const BeadArity ar = bead_arity(cell.via);
    Bead bead;
    bead.kind = cell.via;
    bead.src_begin = i - ar.src;
    bead.src_end = i;
    bead.tgt_begin = j - ar.tgt;
    bead.tgt_end = j;
    const double s = src_pre[i] - src_pre[bead.src_begin];
    const double t = tgt_pre[j] - tgt_pre[bead.tgt_begin];
    bead.cost = bead_cost(cell.via, s, t, params);
    beads.push_back(bead);
    i = bead.src_begin;
    j = bead.tgt_begin;
  }
  std::reverse(beads.begin(), beads.end());
  return beads;
}

std::vector<Bead> align_sentences(const std::vector<std::string>& src_sentences,
                                  const std::vector<std::string>& tgt_sentences,
                                  const CostParams& params) {
  std::vector<double> src_lengths, tgt_lengths;
  src_lengths.reserve(src_sentences.size());
  tgt_lengths.reserve(tgt_sentences.size());
  for (const auto& s : src_sentences) {
    src_lengths.push_back(static_cast<double>(visible_length(s)));
  }
  for (const auto& t : tgt_sentences) {
    tgt_lengths.push_back(static_cast<double>(visible_length(t)));
  }
  return align_lengths(src_lengths, tgt_lengths, params);
}

AlignmentDiagnosis classify_misalignments(const std::vector<Bead>& beads,
                                          std::size_t n_src,
                                          std::size_t n_tgt) {
  AlignmentDiagnosis d;
  std::size_t src_pos = 0, tgt_pos = 0;
  for (const Bead& bead : beads) {
    const BeadArity ar = bead_arity(bead.kind);
    if (bead.src_begin != src_pos || bead.tgt_begin != tgt_pos ||
        bead.src_end - bead.src_begin != static_cast<std::size_t>(ar.src) ||
        bead.tgt_end - bead.tgt_begin != static_cast<std::size_t>(ar.tgt)) {
      throw Error(ErrorKind::Validation,
                  "beads do not tile the sentence lists (gap, overlap, or "
                  "arity mismatch)");
    }
    src_pos = bead.src_end;
    tgt_pos = bead.tgt_end;
    switch (bead.kind) {
      case BeadKind::OneToOne: ++d.one_to_one; break;
      case BeadKind::Insert: ++d.inserts; break;
      case BeadKind::Delete: ++d.deletes; break;
      case BeadKind::Split: ++d.splits; break;
      case BeadKind::Merge: ++d.merges; break;
    }
  }
  if (src_pos != n_src || tgt_pos != n_tgt) {
    throw Error(ErrorKind::Validation,
                "beads do not cover both sentence lists exactly");
  }
  if (beads.empty()) {
    throw Error(ErrorKind::Validation, "empty beading cannot be classified");
  }
  d.beads = beads;
  const std::size_t total = beads.size();
  d.misalignment_rate =
      static_cast<double>(total - d.one_to_one) / static_cast<double>(total);
  return d;
}

DiagnosisTable sample_report(const Corpus& corpus, std::size_t n,
                             std::uint64_t seed, const CostParams& params) {
  if (corpus.pairs.empty()) {
    throw Error(ErrorKind::Validation, "cannot diagnose an empty corpus");
  }
  std::vector<std::size_t> order(corpus.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  if (n < order.size()) order.resize(n);
  // Report rows in corpus order regardless of sampling order.
  std::sort(order.begin(), order.end());

  DiagnosisTable table;
  std::size_t agg_beads = 0, agg_non11 = 0;
  for (std::size_t idx : order) {
    const ChapterPair& pair = corpus.pairs[idx];
    const auto src = split_sentences(pair.source, pair.src_lang);
    const auto tgt = split_sentences(pair.target, pair.tgt_lang);
    if (src.empty() || tgt.empty()) continue;
    std::vector<std::string> src_texts, tgt_texts;
    src_texts.reserve(src.size());
    tgt_texts.reserve(tgt.size());
    for (const auto& s : src) src_texts.push_back(s.text);
    for (const auto& t : tgt) tgt_texts.push_back(t.text);
    const auto beads = align_sentences(src_texts, tgt_texts, params);
    DiagnosisRow row;
    row.book = pair.book;
    row.chapter = pair.index;
    row.diagnosis = classify_misalignments(beads, src_texts.size(), tgt_texts.size());
    agg_beads += row.diagnosis.beads.size();
    agg_non11 += row.diagnosis.beads.size() - row.diagnosis.one_to_one;
    table.aggregate.one_to_one += row.diagnosis.one_to_one;
    table.aggregate.inserts += row.diagnosis.inserts;
    table.aggregate.deletes += row.diagnosis.deletes;
    table.aggregate.splits += row.diagnosis.splits;
    table.aggregate.merges += row.diagnosis.merges;
    table.rows.push_back(std::move(row));
  }
  if (agg_beads > 0) {
    table.aggregate.misalignment_rate =
        static_cast<double>(agg_non11) / static_cast<double>(agg_beads);
  }
  return table;
}

std::string diagnosis_to_csv(const DiagnosisTable& table) {
  std::string out =
      "book,chapter,beads,one_to_one,insert,delete,split,merge,"
      "misalignment_rate\n";
  auto row_line = [](const std::string& book, const std::string& chapter,
                     const AlignmentDiagnosis& d, std::size_t beads) {
    return csv_row({book, chapter, std::to_string(beads),
                    std::to_string(d.one_to_one), std::to_string(d.inserts),
                    std::to_string(d.deletes), std::to_string(d.splits),
                    std::to_string(d.merges),
                    format_double(d.misalignment_rate, 6)});
  };
  for (const DiagnosisRow& row : table.rows) {
    out += row_line(row.book, std::to_string(row.chapter), row.diagnosis,
                    row.diagnosis.beads.size());
  }
  const auto& agg = table.aggregate;
  const std::size_t agg_beads =
      agg.one_to_one + agg.inserts + agg.deletes + agg.splits + agg.merges;
  out += row_line("__all__", "-1", agg, agg_beads);
  return out;
}

}  // namespace ch2ch
