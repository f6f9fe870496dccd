// Stage orchestration behind the CLI: one configuration object, one runner
// per subcommand, file artifacts with content-hash manifests so unchanged
// stages are skipped.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ch2ch/backend.hpp"
#include "ch2ch/corpus.hpp"

namespace ch2ch {

inline constexpr const char* kVersion = "0.1.0";

struct PipelineConfig {
  std::string corpus_path;
  std::string src_lang = "zh";
  std::string tgt_lang = "en";
  long long budget = 2048;
  std::size_t window = 10;
  double ratio_threshold = 3.0;
  std::size_t n_test_books = 18;
  double valid_fraction = 0.2;
  std::uint64_t seed = 42;
  BackendEndpoint backend;
  DecodingParams decoding;
  std::string token_counter = "cjk";  // whitespace | cjk | remote
  std::string output_dir = "out";
  std::vector<std::string> cleaning_rules;  // empty = defaults
  std::string prompt_template;              // empty = default
  std::string separator = "<SEP>";
  std::string eos = "<EOS>";
  int max_in_flight = 4;
  bool fail_fast = false;
  std::vector<long long> bucket_edges = {512, 1024, 2048};
  std::string lexicon_dir;  // optional overrides
  std::size_t diagnose_sample = 50;
  std::string bleu_smoothing = "none";  // none | add-eps
};

struct Violation {
  std::string field;
  std::string message;
};

// Structural validation; returns every violation at once.
std::vector<Violation> validate_config(const PipelineConfig& config);

PipelineConfig config_from_json(const std::string& text);
PipelineConfig config_from_file(const std::filesystem::path& path);
// Canonical form (sorted keys, all fields explicit); its hash keys the
// stage manifests.
std::string config_to_json(const PipelineConfig& config);

struct StageFlags {
  bool hard_split = false;
  bool force = false;  // run even when the manifest says fresh
  int jobs = 0;        // >0 caps translate concurrency
};

struct StageResult {
  std::string stage;
  bool skipped = false;
  std::vector<std::string> outputs;
};

const std::vector<std::string>& stage_names();

// Executes one subcommand: reads declared inputs from the output directory
// (or the configured corpus), writes outputs atomically, records a manifest
// with input/output content hashes, and skips the work when nothing changed.
StageResult run_stage(const std::string& name, const PipelineConfig& config,
                      const StageFlags& flags = {});

}  // namespace ch2ch
