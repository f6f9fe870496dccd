#include "ch2ch/pipeline.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ch2ch/backend.hpp"
#include "ch2ch/diagnostics.hpp"
#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/metrics.hpp"
#include "ch2ch/repetition.hpp"
#include "ch2ch/segment.hpp"
#include "ch2ch/sentences.hpp"
#include "ch2ch/text.hpp"
#include "ch2ch/tokens.hpp"

namespace fs = std::filesystem;

namespace ch2ch {

namespace {

// --- config helpers -------------------------------------------------------

std::vector<std::string> effective_rules(const PipelineConfig& config) {
  return config.cleaning_rules.empty() ? default_cleaning_rules()
                                       : config.cleaning_rules;
}

std::string effective_template_text(const PipelineConfig& config) {
  return config.prompt_template.empty() ? std::string(default_prompt_template())
                                        : config.prompt_template;
}

std::unique_ptr<TokenCounter> counter_for(const PipelineConfig& config) {
  if (config.token_counter == "remote") {
    return std::make_unique<RemoteTokenCounter>(config.backend);
  }
  return make_counter(config.token_counter);
}

// --- config parsing -------------------------------------------------------

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> known,
                const std::string& prefix, std::vector<std::string>& problems) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) problems.push_back("unknown key \"" + prefix + it.key() + "\"");
  }
}

template <typename T>
void take_field(const nlohmann::json& j, const char* key, T& into,
                const std::string& prefix, std::vector<std::string>& problems) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    problems.push_back("\"" + prefix + key + "\" has the wrong JSON type");
  }
}

// size_t fields parse through a signed value so "-3" is reported instead of
// wrapping around.
void take_size(const nlohmann::json& j, const char* key, std::size_t& into,
               const std::string& prefix, std::vector<std::string>& problems) {
  if (!j.contains(key)) return;
  long long v = static_cast<long long>(into);
  const std::size_t before = problems.size();
  take_field(j, key, v, prefix, problems);
  if (problems.size() != before) return;
  if (v < 0) {
    problems.push_back("\"" + prefix + key + "\" must not be negative");
    return;
  }
  into = static_cast<std::size_t>(v);
}

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out;
  for (const auto& p : problems) {
    if (!out.empty()) out += "; ";
    out += p;
  }
  return out;
}

// --- artifact paths -------------------------------------------------------

fs::path opath(const PipelineConfig& config, const std::string& name) {
  return fs::path(config.output_dir) / name;
}

const std::map<std::string, std::string>& artifact_producers() {
  static const std::map<std::string, std::string> m = {
      {"corpus.clean.jsonl", "ingest"},
      {"cleaning_report.json", "ingest"},
      {"split.json", "split"},
      {"chunks.jsonl", "chunk"},
      {"blocks.jsonl", "pack"},
      {"records.jsonl", "translate"},
      {"records.trimmed.jsonl", "postprocess"},
      {"merged.jsonl", "postprocess"},
  };
  return m;
}

void require_inputs(const std::vector<fs::path>& inputs) {
  for (const auto& p : inputs) {
    if (fs::exists(p)) continue;
    std::string msg = "missing input " + p.generic_string();
    const auto& m = artifact_producers();
    const auto hit = m.find(p.filename().string());
    if (hit != m.end()) msg += " (run the '" + hit->second + "' stage first)";
    throw Error(ErrorKind::Io, msg);
  }
}

// --- stage manifests ------------------------------------------------------

nlohmann::json hash_map(const std::vector<fs::path>& paths) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& p : paths) j[p.generic_string()] = sha256_file_hex(p);
  return j;
}

bool all_exist(const std::vector<fs::path>& paths) {
  return std::all_of(paths.begin(), paths.end(),
                     [](const fs::path& p) { return fs::exists(p); });
}

bool manifest_fresh(const fs::path& manifest_path, const std::string& stage_key,
                    const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
  if (!fs::exists(manifest_path)) return false;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(manifest_path));
  } catch (...) {
    return false;
  }
  if (!j.is_object()) return false;
  if (j.value("version", std::string()) != kVersion) return false;
  if (j.value("stage_key", std::string()) != stage_key) return false;
  if (!all_exist(inputs) || !all_exist(outputs)) return false;
  return j.value("inputs", nlohmann::json()) == hash_map(inputs) &&
         j.value("outputs", nlohmann::json()) == hash_map(outputs);
}

void write_manifest(const fs::path& manifest_path, const std::string& stage,
                    const std::string& stage_key,
                    const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs, bool deterministic) {
  nlohmann::json j;
  j["stage"] = stage;
  j["version"] = kVersion;
  j["stage_key"] = stage_key;
  j["inputs"] = hash_map(inputs);
  j["outputs"] = hash_map(outputs);
  j["deterministic"] = deterministic;
  atomic_write(manifest_path, j.dump(2) + "\n");
}

// --- artifact loaders -----------------------------------------------------

void sort_pairs(Corpus& corpus) {
  std::sort(corpus.pairs.begin(), corpus.pairs.end(),
            [](const ChapterPair& a, const ChapterPair& b) {
              return std::tie(a.book, a.index) < std::tie(b.book, b.index);
            });
}

Corpus load_clean_corpus(const PipelineConfig& config) {
  Corpus corpus =
      ingest(opath(config, "corpus.clean.jsonl"), config.src_lang, config.tgt_lang);
  sort_pairs(corpus);
  return corpus;
}

SplitAssignment load_split(const PipelineConfig& config) {
  return split_from_json(read_file(opath(config, "split.json")));
}

// Applies `parse` to every non-empty line, rethrowing with file:line context.
template <typename T>
std::vector<T> load_lines(const fs::path& path,
                          const std::function<T(const std::string&)>& parse) {
  std::vector<T> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse(line));
    } catch (const Error& e) {
      throw Error(ErrorKind::Validation, path.generic_string() + ":" +
                                             std::to_string(lineno) + ": " +
                                             e.what());
    }
  }
  return out;
}

std::vector<Chunk> load_chunks(const fs::path& path) {
  return load_lines<Chunk>(path, [](const std::string& l) { return chunk_from_json(l); });
}

std::vector<Block> load_blocks(const fs::path& path) {
  return load_lines<Block>(path, [](const std::string& l) { return block_from_json(l); });
}

std::vector<TranslationRecord> load_records(const fs::path& path) {
  return load_lines<TranslationRecord>(
      path, [](const std::string& l) { return record_from_json(l); });
}

std::vector<RepetitionSample> samples_from_records(
    const std::vector<TranslationRecord>& records, const TokenCounter& counter) {
  std::vector<RepetitionSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) {
    RepetitionSample s;
    s.record_id =
        r.book + "#" + std::to_string(r.chapter) + "#" + std::to_string(r.ordinal);
    s.input_tokens = static_cast<long long>(counter.count(r.request_text));
    s.event = r.repetition;
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string ensure_newline(std::string text) {
  if (!text.empty() && text.back() != '\n') text += '\n';
  return text;
}

// --- stage definitions ----------------------------------------------------

struct StageIo {
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  // Returns one content string per declared output, in order.
  std::function<std::vector<std::string>()> run;
};

std::vector<fs::path> corpus_input_files(const PipelineConfig& config) {
  const fs::path p = config.corpus_path;
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  }
  return {p};
}

StageIo stage_ingest(const PipelineConfig& config) {
  StageIo io;
  if (config.corpus_path.empty()) {
    throw Error(ErrorKind::Validation, "\"corpus\" is required for the ingest stage");
  }
  io.inputs = corpus_input_files(config);
  io.outputs = {opath(config, "corpus.clean.jsonl"),
                opath(config, "cleaning_report.json")};
  io.run = [&config]() {
    Corpus raw = ingest(config.corpus_path, config.src_lang, config.tgt_lang);
    const std::vector<std::string> rules = effective_rules(config);
    for (auto& pair : raw.pairs) pair = normalize(pair, rules);
    raw.provenance.rules_applied = rules;
    const auto counter = counter_for(config);
    auto [kept, report] = filter_by_ratio(raw, config.ratio_threshold, *counter);
    report.rules_applied.insert(report.rules_applied.begin(), rules.begin(),
                                rules.end());
    sort_pairs(kept);
    return std::vector<std::string>{corpus_to_jsonl(kept),
                                    ensure_newline(cleaning_report_to_json(report))};
  };
  return io;
}

StageIo stage_split(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl")};
  io.outputs = {opath(config, "split.json")};
  io.run = [&config]() {
    const Corpus corpus = load_clean_corpus(config);
    const SplitAssignment split = split_dataset(
        corpus, config.n_test_books, config.valid_fraction, config.seed);
    return std::vector<std::string>{ensure_newline(split_to_json(split))};
  };
  return io;
}

StageIo stage_stats(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl"), opath(config, "split.json")};
  io.outputs = {opath(config, "stats.csv")};
  io.run = [&config]() {
    const Corpus corpus = load_clean_corpus(config);
    const SplitAssignment split = load_split(config);
    const auto counter = counter_for(config);
    return std::vector<std::string>{
        stats_to_csv(compute_stats(corpus, split, *counter))};
  };
  return io;
}

StageIo stage_diagnose(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl")};
  io.outputs = {opath(config, "diagnosis.csv")};
  io.run = [&config]() {
    const Corpus corpus = load_clean_corpus(config);
    const DiagnosisTable table =
        sample_report(corpus, config.diagnose_sample, config.seed, CostParams{});
    return std::vector<std::string>{diagnosis_to_csv(table)};
  };
  return io;
}

StageIo stage_chunk(const PipelineConfig& config, const StageFlags& flags) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl"), opath(config, "split.json")};
  io.outputs = {opath(config, "chunks.jsonl")};
  io.run = [&config, &flags]() {
    const Corpus corpus = load_clean_corpus(config);
    const SplitAssignment split = load_split(config);
    std::set<ChapterKey> wanted(split.train.begin(), split.train.end());
    wanted.insert(split.valid.begin(), split.valid.end());
    const auto counter = counter_for(config);
    ChunkOptions options;
    options.budget = config.budget;
    options.hard_split = flags.hard_split;
    std::string lines;
    for (const auto& pair : corpus.pairs) {
      if (!wanted.count({pair.book, pair.index})) continue;
      for (const Chunk& chunk : chunk_equal(pair, *counter, options)) {
        lines += chunk_to_json(chunk) + "\n";
      }
    }
    return std::vector<std::string>{std::move(lines)};
  };
  return io;
}

StageIo stage_pack(const PipelineConfig& config, const StageFlags& flags) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl"), opath(config, "split.json")};
  io.outputs = {opath(config, "blocks.jsonl")};
  io.run = [&config, &flags]() {
    const Corpus corpus = load_clean_corpus(config);
    const SplitAssignment split = load_split(config);
    const auto counter = counter_for(config);
    std::string lines;
    for (const auto& pair : corpus.pairs) {
      if (!split.test_books.count(pair.book)) continue;
      const auto sentences = split_sentences(pair.source, pair.src_lang);
      for (const Block& block :
           pack_blocks(sentences, pair.book, pair.index, pair.src_lang, *counter,
                       config.budget, flags.hard_split)) {
        lines += block_to_json(block) + "\n";
      }
    }
    return std::vector<std::string>{std::move(lines)};
  };
  return io;
}

StageIo stage_export_train(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "chunks.jsonl")};
  io.outputs = {opath(config, "train.jsonl")};
  io.run = [&config]() {
    std::string lines;
    for (const Chunk& chunk : load_chunks(opath(config, "chunks.jsonl"))) {
      // A side can be legitimately empty when a chapter has fewer sentences
      // than chunks; such rows carry no training signal.
      if (chunk.src.empty() || chunk.tgt.empty()) continue;
      const TrainingExample ex =
          build_clm_sequence(chunk.src, chunk.tgt, config.separator, config.eos);
      lines += training_example_to_json(ex) + "\n";
    }
    return std::vector<std::string>{std::move(lines)};
  };
  return io;
}

StageIo stage_translate(const PipelineConfig& config, const StageFlags& flags,
                        const std::string& stage_key) {
  StageIo io;
  io.inputs = {opath(config, "blocks.jsonl")};
  io.outputs = {opath(config, "records.jsonl")};
  io.run = [&config, &flags, stage_key]() {
    const std::vector<Block> blocks = load_blocks(opath(config, "blocks.jsonl"));
    const PromptTemplate tmpl(effective_template_text(config));

    // The partial manifest only resumes runs with the same stage key; --force
    // or a config change starts from scratch.
    const fs::path partial = opath(config, "records.partial.jsonl");
    const fs::path partial_key = opath(config, "records.partial.key");
    std::string stored_key;
    if (fs::exists(partial_key)) {
      try {
        stored_key = read_file(partial_key);
      } catch (const Error&) {
      }
    }
    if (flags.force || stored_key != stage_key) {
      fs::remove(partial);
    }
    atomic_write(partial_key, stage_key);

    TranslateRunOptions options;
    options.max_in_flight = flags.jobs > 0 ? flags.jobs : config.max_in_flight;
    options.fail_fast = config.fail_fast;
    options.resume_manifest = partial.string();
    const std::vector<TranslationRecord> records =
        translate_corpus(blocks, config.backend, config.decoding, tmpl,
                         config.src_lang, config.tgt_lang, options);

    std::size_t failed = 0;
    std::string first_error;
    for (const auto& r : records) {
      if (r.success) continue;
      ++failed;
      if (first_error.empty()) first_error = r.error;
    }
    if (failed > 0 || records.size() != blocks.size()) {
      std::string msg = "translate finished " +
                        std::to_string(records.size() - failed) + "/" +
                        std::to_string(blocks.size()) + " blocks";
      if (!first_error.empty()) msg += "; first failure: " + first_error;
      msg += " (progress saved to " + partial.generic_string() +
             "; rerun 'translate' to resume)";
      throw Error(ErrorKind::Backend, msg);
    }

    std::string lines;
    for (const auto& r : records) lines += record_to_json(r) + "\n";
    return std::vector<std::string>{std::move(lines)};
  };
  return io;
}

StageIo stage_postprocess(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "records.jsonl")};
  io.outputs = {opath(config, "records.trimmed.jsonl"), opath(config, "merged.jsonl")};
  io.run = [&config]() {
    std::vector<TranslationRecord> records =
        load_records(opath(config, "records.jsonl"));
    std::string trimmed_lines;
    std::map<ChapterKey, std::vector<std::pair<int, std::string>>> grouped;
    for (auto& r : records) {
      if (!r.success) {
        throw Error(ErrorKind::Validation,
                    "record " + r.book + "#" + std::to_string(r.chapter) + "#" +
                        std::to_string(r.ordinal) +
                        " is a failure; complete 'translate' before postprocess");
      }
      auto [text, event] = trim_repetition(r.raw_output, config.window);
      r.trimmed_output = std::move(text);
      r.repetition = event;
      trimmed_lines += record_to_json(r) + "\n";
      grouped[{r.book, r.chapter}].emplace_back(r.ordinal, r.trimmed_output);
    }
    std::string merged_lines;
    for (const auto& [key, parts] : grouped) {
      const MergedChapter merged = merge_blocks(parts, config.tgt_lang);
      nlohmann::json j;
      j["book"] = key.first;
      j["chapter"] = key.second;
      j["text"] = merged.text;
      nlohmann::json spans = nlohmann::json::array();
      for (const auto& span : merged.block_spans) {
        spans.push_back({span.first, span.second});
      }
      j["block_spans"] = spans;
      merged_lines += j.dump() + "\n";
    }
    return std::vector<std::string>{std::move(trimmed_lines), std::move(merged_lines)};
  };
  return io;
}

std::map<ChapterKey, std::string> load_merged(const fs::path& path) {
  std::map<ChapterKey, std::string> merged;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const ChapterKey key{j.at("book").get<std::string>(),
                           j.at("chapter").get<int>()};
      if (merged.count(key)) {
        throw Error(ErrorKind::Validation, "duplicate merged chapter " + key.first +
                                               "#" + std::to_string(key.second));
      }
      merged[key] = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Validation, path.generic_string() + ":" +
                                             std::to_string(lineno) + ": " +
                                             e.what());
    }
  }
  return merged;
}

StageIo stage_evaluate(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "corpus.clean.jsonl"), opath(config, "split.json"),
               opath(config, "merged.jsonl"), opath(config, "records.trimmed.jsonl")};
  io.outputs = {opath(config, "eval_report.json"), opath(config, "eval_chapters.csv")};
  io.run = [&config]() {
    const Corpus corpus = load_clean_corpus(config);
    const SplitAssignment split = load_split(config);
    std::vector<ChapterPair> references;
    for (const auto& pair : corpus.pairs) {
      if (split.test_books.count(pair.book)) references.push_back(pair);
    }
    const auto merged = load_merged(opath(config, "merged.jsonl"));
    const auto records = load_records(opath(config, "records.trimmed.jsonl"));
    const auto counter = counter_for(config);
    const RepetitionReport repetition = repetition_stats(
        samples_from_records(records, *counter), config.bucket_edges);

    Lexicons lexicons = Lexicons::defaults();
    if (!config.lexicon_dir.empty()) lexicons.override_from_dir(config.lexicon_dir);

    RunMeta run;
    run.params = config.decoding;
    run.backend_url = config.backend.base_url;
    run.backend_mode = config.backend.mode;
    run.budget = config.budget;
    run.seed = config.seed;

    BleuOptions bleu_options;
    bleu_options.smoothing = config.bleu_smoothing == "add-eps"
                                 ? BleuSmoothing::AddEps
                                 : BleuSmoothing::None;

    const EvalReport report =
        evaluate(references, merged, repetition, lexicons, run, bleu_options);
    return std::vector<std::string>{ensure_newline(eval_report_to_json(report)),
                                    chapters_csv(report)};
  };
  return io;
}

StageIo stage_rep_report(const PipelineConfig& config) {
  StageIo io;
  io.inputs = {opath(config, "records.trimmed.jsonl")};
  io.outputs = {opath(config, "rep_records.csv"), opath(config, "rep_buckets.csv")};
  io.run = [&config]() {
    const auto records = load_records(opath(config, "records.trimmed.jsonl"));
    const auto counter = counter_for(config);
    const auto samples = samples_from_records(records, *counter);
    const RepetitionReport report = repetition_stats(samples, config.bucket_edges);
    return std::vector<std::string>{repetition_records_csv(samples),
                                    repetition_buckets_csv(report)};
  };
  return io;
}

StageIo build_stage(const std::string& name, const PipelineConfig& config,
                    const StageFlags& flags, const std::string& stage_key) {
  if (name == "ingest") return stage_ingest(config);
  if (name == "split") return stage_split(config);
  if (name == "stats") return stage_stats(config);
  if (name == "diagnose") return stage_diagnose(config);
  if (name == "chunk") return stage_chunk(config, flags);
  if (name == "pack") return stage_pack(config, flags);
  if (name == "export-train") return stage_export_train(config);
  if (name == "translate") return stage_translate(config, flags, stage_key);
  if (name == "postprocess") return stage_postprocess(config);
  if (name == "evaluate") return stage_evaluate(config);
  if (name == "rep-report") return stage_rep_report(config);
  throw Error(ErrorKind::Validation, "unknown stage \"" + name + "\"");
}

bool stage_uses_hard_split(const std::string& name) {
  return name == "chunk" || name == "pack";
}

}  // namespace

// --- config ---------------------------------------------------------------

std::vector<Violation> validate_config(const PipelineConfig& config) {
  std::vector<Violation> violations;
  const auto add = [&](const char* field, std::string message) {
    violations.push_back({field, std::move(message)});
  };

  if (!lang_supported(config.src_lang)) {
    add("src_lang", "unsupported language \"" + config.src_lang + "\"");
  }
  if (!lang_supported(config.tgt_lang)) {
    add("tgt_lang", "unsupported language \"" + config.tgt_lang + "\"");
  }
  if (config.budget < 1) add("budget", "must be at least 1");
  if (config.window < 1) add("window", "must be at least 1");
  if (!(config.ratio_threshold > 1.0)) add("ratio_threshold", "must exceed 1.0");
  if (config.n_test_books < 1) add("n_test_books", "must be at least 1");
  if (!(config.valid_fraction > 0.0 && config.valid_fraction < 1.0)) {
    add("valid_fraction", "must lie in (0, 1)");
  }
  if (config.token_counter != "whitespace" && config.token_counter != "cjk" &&
      config.token_counter != "remote") {
    add("token_counter",
        "must be \"whitespace\", \"cjk\" or \"remote\", got \"" +
            config.token_counter + "\"");
  }
  if (config.output_dir.empty()) add("output_dir", "must not be empty");
  if (config.separator.empty()) add("separator", "must not be empty");
  if (config.eos.empty()) add("eos", "must not be empty");
  if (!config.separator.empty() && config.separator == config.eos) {
    add("separator", "must differ from eos");
  }
  if (config.max_in_flight < 1) add("max_in_flight", "must be at least 1");
  for (std::size_t i = 0; i < config.bucket_edges.size(); ++i) {
    if (config.bucket_edges[i] <= 0) {
      add("bucket_edges", "edges must be positive");
      break;
    }
    if (i > 0 && config.bucket_edges[i] <= config.bucket_edges[i - 1]) {
      add("bucket_edges", "edges must be strictly increasing");
      break;
    }
  }
  if (config.bleu_smoothing != "none" && config.bleu_smoothing != "add-eps") {
    add("bleu_smoothing", "must be \"none\" or \"add-eps\", got \"" +
                              config.bleu_smoothing + "\"");
  }
  if (config.diagnose_sample < 1) add("diagnose_sample", "must be at least 1");
  if (!config.lexicon_dir.empty() && !fs::is_directory(config.lexicon_dir)) {
    add("lexicon_dir", "not a directory: " + config.lexicon_dir);
  }
  for (const auto& rule : config.cleaning_rules) {
    try {
      apply_cleaning_rule("", rule);
    } catch (const Error& e) {
      add("cleaning_rules", e.what());
    }
  }
  if (!config.prompt_template.empty()) {
    try {
      PromptTemplate check(config.prompt_template);
    } catch (const Error& e) {
      add("prompt_template", e.what());
    }
  }
  for (const auto& problem : endpoint_problems(config.backend)) {
    add("backend", problem);
  }
  for (const auto& problem : decoding_param_problems(config.decoding)) {
    add("decoding", problem);
  }
  return violations;
}

PipelineConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorKind::Validation, "config root must be a JSON object");
  }

  PipelineConfig c;
  std::vector<std::string> problems;
  check_keys(j,
             {"corpus", "src_lang", "tgt_lang", "budget", "window",
              "ratio_threshold", "n_test_books", "valid_fraction", "seed",
              "backend", "decoding", "token_counter", "output_dir",
              "cleaning_rules", "prompt_template", "separator", "eos",
              "max_in_flight", "fail_fast", "bucket_edges", "lexicon_dir",
              "diagnose_sample", "bleu_smoothing"},
             "", problems);
  take_field(j, "corpus", c.corpus_path, "", problems);
  take_field(j, "src_lang", c.src_lang, "", problems);
  take_field(j, "tgt_lang", c.tgt_lang, "", problems);
  take_field(j, "budget", c.budget, "", problems);
  take_size(j, "window", c.window, "", problems);
  take_field(j, "ratio_threshold", c.ratio_threshold, "", problems);
  take_size(j, "n_test_books", c.n_test_books, "", problems);
  take_field(j, "valid_fraction", c.valid_fraction, "", problems);
  take_field(j, "seed", c.seed, "", problems);
  take_field(j, "token_counter", c.token_counter, "", problems);
  take_field(j, "output_dir", c.output_dir, "", problems);
  take_field(j, "cleaning_rules", c.cleaning_rules, "", problems);
  take_field(j, "prompt_template", c.prompt_template, "", problems);
  take_field(j, "separator", c.separator, "", problems);
  take_field(j, "eos", c.eos, "", problems);
  take_field(j, "max_in_flight", c.max_in_flight, "", problems);
  take_field(j, "fail_fast", c.fail_fast, "", problems);
  take_field(j, "bucket_edges", c.bucket_edges, "", problems);
  take_field(j, "lexicon_dir", c.lexicon_dir, "", problems);
  take_size(j, "diagnose_sample", c.diagnose_sample, "", problems);
  take_field(j, "bleu_smoothing", c.bleu_smoothing, "", problems);

  if (j.contains("backend")) {
    const nlohmann::json& b = j.at("backend");
    if (!b.is_object()) {
      problems.push_back("\"backend\" must be an object");
    } else {
      check_keys(b,
                 {"base_url", "mode", "model", "auth_env", "timeout_s",
                  "max_retries", "backoff"},
                 "backend.", problems);
      take_field(b, "base_url", c.backend.base_url, "backend.", problems);
      take_field(b, "mode", c.backend.mode, "backend.", problems);
      take_field(b, "model", c.backend.model, "backend.", problems);
      take_field(b, "auth_env", c.backend.auth_env, "backend.", problems);
      take_field(b, "timeout_s", c.backend.timeout_s, "backend.", problems);
      take_field(b, "max_retries", c.backend.max_retries, "backend.", problems);
      if (b.contains("backoff")) {
        const nlohmann::json& bo = b.at("backoff");
        if (!bo.is_object()) {
          problems.push_back("\"backend.backoff\" must be an object");
        } else {
          check_keys(bo, {"initial_ms", "multiplier", "max_ms"},
                     "backend.backoff.", problems);
          take_field(bo, "initial_ms", c.backend.backoff.initial_ms,
                     "backend.backoff.", problems);
          take_field(bo, "multiplier", c.backend.backoff.multiplier,
                     "backend.backoff.", problems);
          take_field(bo, "max_ms", c.backend.backoff.max_ms, "backend.backoff.",
                     problems);
        }
      }
    }
  }
  if (j.contains("decoding")) {
    const nlohmann::json& d = j.at("decoding");
    if (!d.is_object()) {
      problems.push_back("\"decoding\" must be an object");
    } else {
      check_keys(d,
                 {"strategy", "beam_size", "repetition_penalty", "max_new_tokens",
                  "stop"},
                 "decoding.", problems);
      take_field(d, "strategy", c.decoding.strategy, "decoding.", problems);
      take_field(d, "beam_size", c.decoding.beam_size, "decoding.", problems);
      take_field(d, "repetition_penalty", c.decoding.repetition_penalty,
                 "decoding.", problems);
      take_field(d, "max_new_tokens", c.decoding.max_new_tokens, "decoding.",
                 problems);
      take_field(d, "stop", c.decoding.stop_token, "decoding.", problems);
    }
  }

  if (!problems.empty()) {
    throw Error(ErrorKind::Validation, "invalid config: " + join_problems(problems));
  }
  return c;
}

PipelineConfig config_from_file(const fs::path& path) {
  return config_from_json(read_file(path));
}

std::string config_to_json(const PipelineConfig& config) {
  nlohmann::json j;
  j["corpus"] = config.corpus_path;
  j["src_lang"] = config.src_lang;
  j["tgt_lang"] = config.tgt_lang;
  j["budget"] = config.budget;
  j["window"] = config.window;
  j["ratio_threshold"] = config.ratio_threshold;
  j["n_test_books"] = config.n_test_books;
  j["valid_fraction"] = config.valid_fraction;
  j["seed"] = config.seed;
  j["backend"] = {{"base_url", config.backend.base_url},
                  {"mode", config.backend.mode},
                  {"model", config.backend.model},
                  {"auth_env", config.backend.auth_env},
                  {"timeout_s", config.backend.timeout_s},
                  {"max_retries", config.backend.max_retries},
                  {"backoff",
                   {{"initial_ms", config.backend.backoff.initial_ms},
                    {"multiplier", config.backend.backoff.multiplier},
                    {"max_ms", config.backend.backoff.max_ms}}}};
  j["decoding"] = {{"strategy", config.decoding.strategy},
                   {"beam_size", config.decoding.beam_size},
                   {"repetition_penalty", config.decoding.repetition_penalty},
                   {"max_new_tokens", config.decoding.max_new_tokens},
                   {"stop", config.decoding.stop_token}};
  j["token_counter"] = config.token_counter;
  j["output_dir"] = config.output_dir;
  // Canonical form resolves the "empty means default" conveniences so the
  // stage hash captures what the run actually does.
  j["cleaning_rules"] = effective_rules(config);
  j["prompt_template"] = effective_template_text(config);
  j["separator"] = config.separator;
  j["eos"] = config.eos;
  j["max_in_flight"] = config.max_in_flight;
  j["fail_fast"] = config.fail_fast;
  j["bucket_edges"] = config.bucket_edges;
  j["lexicon_dir"] = config.lexicon_dir;
  j["diagnose_sample"] = config.diagnose_sample;
  j["bleu_smoothing"] = config.bleu_smoothing;
  return j.dump(2) + "\n";
}

// --- stage runner -----------------------------------------------------------

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "ingest",       "split",     "stats",       "diagnose",
      "chunk",        "pack",      "export-train", "translate",
      "postprocess",  "evaluate",  "rep-report"};
  return names;
}

StageResult run_stage(const std::string& name, const PipelineConfig& config,
                      const StageFlags& flags) {
  const auto& names = stage_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error(ErrorKind::Validation, "unknown stage \"" + name + "\"");
  }
  const std::vector<Violation> violations = validate_config(config);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
    throw Error(ErrorKind::Validation, msg);
  }

  try {
    fs::create_directories(config.output_dir);
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorKind::Io,
                "cannot create output directory " + config.output_dir + ": " +
                    e.what());
  }

  // The stage key covers the resolved config plus the flags that change
  // artifact content; concurrency does not, so --jobs stays out.
  std::string key_material = config_to_json(config);
  if (stage_uses_hard_split(name)) {
    key_material += "hard_split=";
    key_material += flags.hard_split ? '1' : '0';
    key_material += '\n';
  }
  const std::string stage_key = sha256_hex(key_material);

  StageIo io = build_stage(name, config, flags, stage_key);
  require_inputs(io.inputs);

  const fs::path manifest_path = opath(config, name + ".manifest.json");
  StageResult result;
  result.stage = name;
  for (const auto& p : io.outputs) result.outputs.push_back(p.generic_string());

  if (!flags.force && manifest_fresh(manifest_path, stage_key, io.inputs, io.outputs)) {
    result.skipped = true;
    return result;
  }

  const std::vector<std::string> contents = io.run();
  if (contents.size() != io.outputs.size()) {
    throw Error(ErrorKind::Internal, "stage \"" + name + "\" produced " +
                                         std::to_string(contents.size()) +
                                         " outputs, expected " +
                                         std::to_string(io.outputs.size()));
  }
  for (std::size_t i = 0; i < io.outputs.size(); ++i) {
    atomic_write(io.outputs[i], contents[i]);
  }
  const bool deterministic =
      name != "translate" ||
      config.backend.base_url.rfind("mock:", 0) == 0;
  write_manifest(manifest_path, name, stage_key, io.inputs, io.outputs,
                 deterministic);
  return result;
}

}  // namespace ch2ch
