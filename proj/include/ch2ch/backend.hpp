// Translation backend client: prompt templating, decoder-only training
// example export, and the HTTP/mock transport that ships blocks to an
// external model with explicit decoding parameters.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ch2ch/repetition.hpp"
#include "ch2ch/segment.hpp"
#include "ch2ch/tokens.hpp"

namespace ch2ch {

class PromptTemplate {
 public:
  // Validates at registration: {src_lang}, {tgt_lang}, {src} each exactly once.
  explicit PromptTemplate(std::string text);
  const std::string& text() const { return text_; }
  std::string render(const std::string& src_text, const std::string& src_lang,
                     const std::string& tgt_lang) const;

 private:
  std::string text_;
};

const char* default_prompt_template();

struct DecodingParams {
  std::string strategy = "beam";  // "greedy" | "beam"
  int beam_size = 5;
  double repetition_penalty = 1.18;
  int max_new_tokens = 2048;
  std::string stop_token = "<EOS>";
};

// One message per violated field constraint; empty means valid.
std::vector<std::string> decoding_param_problems(const DecodingParams& params);
// Throws Error(Validation) listing every violated field constraint.
void validate_decoding_params(const DecodingParams& params);
std::string decoding_params_to_json(const DecodingParams& params);
DecodingParams decoding_params_from_json(const std::string& json_text);

struct TrainingExample {
  std::string text;
  std::size_t target_start = 0;  // byte offsets into text
  std::size_t target_end = 0;
  std::string separator;
  std::string eos;
};

// "src <SEP> tgt <EOS>" with the loss span covering "tgt <EOS>".
TrainingExample build_clm_sequence(const std::string& src, const std::string& tgt,
                                   const std::string& separator = "<SEP>",
                                   const std::string& eos = "<EOS>");
// Inverse: recovers (src, tgt). Used by round-trip checks.
std::pair<std::string, std::string> split_clm_sequence(const TrainingExample& ex);
std::string training_example_to_json(const TrainingExample& ex);
TrainingExample training_example_from_json(const std::string& line,
                                           const std::string& separator = "<SEP>",
                                           const std::string& eos = "<EOS>");

struct BackoffPolicy {
  int initial_ms = 100;
  double multiplier = 2.0;
  int max_ms = 5000;
};

struct BackendEndpoint {
  // http(s)://host[:port][/prefix], or a mock scheme: "mock:echo",
  // "mock:repeat?tail=12&prob=1.0&seed=7", "mock:replay?file=path".
  std::string base_url = "mock:echo";
  std::string mode = "generic";  // "generic" | "chat-completions"
  std::string model;             // forwarded in chat-completions mode
  // Name of the environment variable holding the bearer token. The secret
  // itself never appears in any config, record, or report.
  std::string auth_env;
  int timeout_s = 30;
  int max_retries = 2;
  BackoffPolicy backoff;
};

std::vector<std::string> endpoint_problems(const BackendEndpoint& endpoint);
void validate_endpoint(const BackendEndpoint& endpoint);

struct TranslationRecord {
  std::string book;
  int chapter = 0;
  int ordinal = 0;
  std::string request_text;
  DecodingParams params;
  bool success = false;
  std::string raw_output;   // present iff success
  std::string error;        // failure cause otherwise
  long long tokens_generated = 0;
  int attempts = 0;
  double latency_ms = 0.0;
  std::string trimmed_output;  // filled by the repetition pass
  std::optional<RepetitionEvent> repetition;
};

std::string record_to_json(const TranslationRecord& record);
TranslationRecord record_from_json(const std::string& line);

// One wire hop. Implementations must be usable from a single worker thread;
// translate_corpus gives each worker its own transport.
struct WireReply {
  int status = 0;
  std::string body;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string describe() const = 0;
  // Deterministic transports (the in-tree mocks) zero out measured latency so
  // identical runs produce byte-identical records.
  virtual bool deterministic() const { return false; }
  virtual WireReply post(const std::string& path, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>&
                             headers) = 0;
};

// Dispatches on the URL scheme; mock: URLs build the in-tree fakes.
std::unique_ptr<Transport> make_transport(const BackendEndpoint& endpoint);

// Blocking translation of one block with retry/backoff. Never throws for
// backend failures; those come back as success=false records. `sleep_ms`
// exists so tests can run retries without real delays.
TranslationRecord translate(const Block& block, const BackendEndpoint& endpoint,
                            const DecodingParams& params,
                            const PromptTemplate& prompt_template,
                            const std::string& src_lang, const std::string& tgt_lang,
                            Transport& transport,
                            const std::function<void(int)>& sleep_ms = {});
TranslationRecord translate(const Block& block, const BackendEndpoint& endpoint,
                            const DecodingParams& params,
                            const PromptTemplate& prompt_template,
                            const std::string& src_lang,
                            const std::string& tgt_lang);

struct TranslateRunOptions {
  int max_in_flight = 4;
  bool fail_fast = false;
  // Append-only JSONL of finished records; successful rows are reused on
  // the next run instead of re-requested.
  std::string resume_manifest;
  std::function<std::unique_ptr<Transport>()> transport_factory;  // tests
  std::function<void(int)> sleep_ms;                              // tests
};

// Bounded-concurrency batch driver. Output order equals input order. With
// fail_fast, blocks not yet started when a failure lands are not attempted
// and are absent from the result.
std::vector<TranslationRecord> translate_corpus(
    const std::vector<Block>& blocks, const BackendEndpoint& endpoint,
    const DecodingParams& params, const PromptTemplate& prompt_template,
    const std::string& src_lang, const std::string& tgt_lang,
    const TranslateRunOptions& options = {});

// Token counts from the backend's /count_tokens endpoint. Thread-safe.
class RemoteTokenCounter : public TokenCounter {
 public:
  explicit RemoteTokenCounter(const BackendEndpoint& endpoint);
  std::string name() const override { return "remote"; }
  std::size_t count(std::string_view text) const override;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

}  // namespace ch2ch
