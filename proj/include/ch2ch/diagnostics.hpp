// Length-based sentence alignment used as a misalignment diagnostic over
// chapter pairs. The aligner finds the minimum-cost monotone beading over
// the kinds {1-1, 0-1, 1-0, 1-2, 2-1}; it is a measurement tool, not a
// training-data filter.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ch2ch/corpus.hpp"

namespace ch2ch {

enum class BeadKind { OneToOne, Insert, Delete, Split, Merge };

const char* bead_kind_name(BeadKind kind);

// How many sentences a bead consumes on each side.
struct BeadArity {
  int src;
  int tgt;
};
BeadArity bead_arity(BeadKind kind);

struct Bead {
  BeadKind kind;
  // Half-open sentence index ranges; sizes match the kind's arity.
  std::size_t src_begin = 0, src_end = 0;
  std::size_t tgt_begin = 0, tgt_end = 0;
  double cost = 0.0;
};

struct CostParams {
  // Expected target/source character-length ratio after per-language
  // normalization (non-whitespace code points).
  double mean_length_ratio = 1.0;
  // Standard deviation of the normalized length difference
  // (t - r*s) / sqrt(r*s + t).
  double sigma = 0.5;
  double one_to_one_penalty = 0.0;
  double split_merge_penalty = 0.5;
  // Insert/Delete carry only their fixed penalty; with one side empty there
  // is no length discrepancy to score.
  double insert_delete_penalty = 1.0;
};

// Gaussian negative log-likelihood (up to a constant) of observing target
// mass `tgt_len` for source mass `src_len`. Exposed for the test oracle.
double length_cost(double src_len, double tgt_len, const CostParams& params);
double bead_cost(BeadKind kind, double src_len, double tgt_len,
                 const CostParams& params);

// Minimum-total-cost monotone beading of the two sentence lists. Lengths
// are non-whitespace code point counts. Both lists must be non-empty.
std::vector<Bead> align_sentences(const std::vector<std::string>& src_sentences,
                                  const std::vector<std::string>& tgt_sentences,
                                  const CostParams& params);

// Same, on precomputed lengths (the DP only ever sees lengths).
std::vector<Bead> align_lengths(const std::vector<double>& src_lengths,
                                const std::vector<double>& tgt_lengths,
                                const CostParams& params);

struct AlignmentDiagnosis {
  std::vector<Bead> beads;
  std::size_t one_to_one = 0;
  std::size_t inserts = 0;
  std::size_t deletes = 0;
  std::size_t splits = 0;
  std::size_t merges = 0;
  double misalignment_rate = 0.0;  // fraction of beads not 1-1
};

// Validates that the beads tile both sides completely and in order, then
// counts per kind.
AlignmentDiagnosis classify_misalignments(const std::vector<Bead>& beads,
                                          std::size_t n_src,
                                          std::size_t n_tgt);

struct DiagnosisRow {
  std::string book;
  int chapter = 0;
  AlignmentDiagnosis diagnosis;
};

struct DiagnosisTable {
  std::vector<DiagnosisRow> rows;
  AlignmentDiagnosis aggregate;  // beads empty; counts and rate only
};

// Seeded sample of n chapters, each aligned and classified. Chapters whose
// either side yields no sentences are skipped.
DiagnosisTable sample_report(const Corpus& corpus, std::size_t n,
                             std::uint64_t seed, const CostParams& params);

std::string diagnosis_to_csv(const DiagnosisTable& table);

}  // namespace ch2ch
