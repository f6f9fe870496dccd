#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "ch2ch/backend.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "json.hpp"

#include "ch2ch/error.hpp"
#include "ch2ch/io.hpp"
#include "ch2ch/rng.hpp"

namespace ch2ch {

namespace {

constexpr const char* kPlaceholders[] = {"{src_lang}", "{tgt_lang}", "{src}"};

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  std::vector<std::string> problems;
  for (const char* ph : kPlaceholders) {
    std::size_t n = 0;
    for (std::size_t pos = text_.find(ph); pos != std::string::npos;
         pos = text_.find(ph, pos + 1)) {
      ++n;
    }
    if (n != 1) {
      problems.push_back(std::string(ph) + " appears " + std::to_string(n) +
                         " times (want exactly 1)");
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid prompt template:";
    for (const auto& p : problems) msg += " " + p + ";";
    msg.pop_back();
    throw Error(ErrorKind::Validation, msg);
  }
}

std::string PromptTemplate::render(const std::string& src_text,
                                   const std::string& src_lang,
                                   const std::string& tgt_lang) const {
  // Single left-to-right scan; substituted values are never rescanned, so
  // braces inside the source text cannot trigger a second substitution.
  std::string out;
  out.reserve(text_.size() + src_text.size());
  std::size_t pos = 0;
  while (pos < text_.size()) {
    bool matched = false;
    for (const char* ph : kPlaceholders) {
      const std::size_t len = std::char_traits<char>::length(ph);
      if (text_.compare(pos, len, ph) != 0) continue;
      if (std::string_view(ph) == "{src_lang}") out += src_lang;
      else if (std::string_view(ph) == "{tgt_lang}") out += tgt_lang;
      else out += src_text;
      pos += len;
      matched = true;
      break;
    }
    if (!matched) out += text_[pos++];
  }
  return out;
}

const char* default_prompt_template() {
  return "Translate this chapter from {src_lang} to {tgt_lang}.\n\n{src}\n\n"
         "Translation:";
}

std::vector<std::string> decoding_param_problems(const DecodingParams& params) {
  std::vector<std::string> problems;
  if (params.strategy != "greedy" && params.strategy != "beam") {
    problems.push_back("strategy must be \"greedy\" or \"beam\"");
  }
  if (params.beam_size < 1) problems.push_back("beam_size must be >= 1");
  if (params.repetition_penalty < 1.0) {
    problems.push_back("repetition_penalty must be >= 1.0");
  }
  if (params.max_new_tokens < 1) problems.push_back("max_new_tokens must be >= 1");
  if (params.stop_token.empty()) problems.push_back("stop_token must be non-empty");
  return problems;
}

void validate_decoding_params(const DecodingParams& params) {
  const auto problems = decoding_param_problems(params);
  if (!problems.empty()) {
    std::string msg = "invalid decoding params:";
    for (const auto& p : problems) msg += " " + p + ";";
    msg.pop_back();
    throw Error(ErrorKind::Validation, msg);
  }
}

namespace {

nlohmann::json params_json(const DecodingParams& params) {
  nlohmann::json j;
  j["strategy"] = params.strategy;
  // beam_size goes out even for greedy so the wire shape is stable.
  j["beam_size"] = params.beam_size;
  j["repetition_penalty"] = params.repetition_penalty;
  j["max_new_tokens"] = params.max_new_tokens;
  j["stop"] = params.stop_token;
  return j;
}

DecodingParams params_from(const nlohmann::json& j) {
  DecodingParams p;
  p.strategy = j.value("strategy", "beam");
  p.beam_size = j.value("beam_size", 5);
  p.repetition_penalty = j.value("repetition_penalty", 1.18);
  p.max_new_tokens = j.value("max_new_tokens", 2048);
  p.stop_token = j.value("stop", "<EOS>");
  return p;
}

}  // namespace

std::string decoding_params_to_json(const DecodingParams& params) {
  return params_json(params).dump();
}

DecodingParams decoding_params_from_json(const std::string& json_text) {
  try {
    return params_from(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("invalid decoding params JSON: ") + e.what());
  }
}

TrainingExample build_clm_sequence(const std::string& src, const std::string& tgt,
                                   const std::string& separator,
                                   const std::string& eos) {
  if (src.empty() || tgt.empty()) {
    throw Error(ErrorKind::Validation,
                "training example needs non-empty source and target");
  }
  if (separator.empty() || eos.empty()) {
    throw Error(ErrorKind::Validation,
                "separator and eos markers must be non-empty");
  }
  TrainingExample ex;
  ex.separator = separator;
  ex.eos = eos;
  ex.text = src + " " + separator + " " + tgt + " " + eos;
  ex.target_start = src.size() + 1 + separator.size() + 1;
  ex.target_end = ex.text.size();
  return ex;
}

std::pair<std::string, std::string> split_clm_sequence(const TrainingExample& ex) {
  const std::string glue = " " + ex.separator + " ";
  const std::string tail = " " + ex.eos;
  const bool shape_ok =
      ex.target_end == ex.text.size() && ex.target_start >= glue.size() &&
      ex.target_start < ex.text.size() &&
      ex.text.compare(ex.target_start - glue.size(), glue.size(), glue) == 0 &&
      ex.text.size() >= ex.target_start + tail.size() &&
      ex.text.compare(ex.text.size() - tail.size(), tail.size(), tail) == 0;
  if (!shape_ok) {
    throw Error(ErrorKind::Validation, "malformed training example");
  }
  std::string src = ex.text.substr(0, ex.target_start - glue.size());
  std::string tgt = ex.text.substr(
      ex.target_start, ex.text.size() - tail.size() - ex.target_start);
  return {std::move(src), std::move(tgt)};
}

std::string training_example_to_json(const TrainingExample& ex) {
  nlohmann::json j;
  j["text"] = ex.text;
  j["target_start"] = ex.target_start;
  j["target_end"] = ex.target_end;
  return j.dump();
}

TrainingExample training_example_from_json(const std::string& line,
                                           const std::string& separator,
                                           const std::string& eos) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("invalid training example JSON: ") + e.what());
  }
  for (const char* key : {"text", "target_start", "target_end"}) {
    if (!j.contains(key)) {
      throw Error(ErrorKind::Validation,
                  std::string("training example is missing \"") + key + "\"");
    }
  }
  TrainingExample ex;
  ex.text = j.at("text").get<std::string>();
  ex.target_start = j.at("target_start").get<std::size_t>();
  ex.target_end = j.at("target_end").get<std::size_t>();
  ex.separator = separator;
  ex.eos = eos;
  return ex;
}

std::vector<std::string> endpoint_problems(const BackendEndpoint& endpoint) {
  std::vector<std::string> problems;
  if (endpoint.base_url.empty()) problems.push_back("base_url must be set");
  if (endpoint.mode != "generic" && endpoint.mode != "chat-completions") {
    problems.push_back("mode must be \"generic\" or \"chat-completions\"");
  }
  if (endpoint.timeout_s < 1) problems.push_back("timeout_s must be >= 1");
  if (endpoint.max_retries < 0) problems.push_back("max_retries must be >= 0");
  if (endpoint.backoff.initial_ms < 0) {
    problems.push_back("backoff.initial_ms must be >= 0");
  }
  if (endpoint.backoff.multiplier < 1.0) {
    problems.push_back("backoff.multiplier must be >= 1.0");
  }
  if (endpoint.backoff.max_ms < endpoint.backoff.initial_ms) {
    problems.push_back("backoff.max_ms must be >= backoff.initial_ms");
  }
  return problems;
}

void validate_endpoint(const BackendEndpoint& endpoint) {
  const auto problems = endpoint_problems(endpoint);
  if (!problems.empty()) {
    std::string msg = "invalid backend endpoint:";
    for (const auto& p : problems) msg += " " + p + ";";
    msg.pop_back();
    throw Error(ErrorKind::Validation, msg);
  }
}

namespace {

nlohmann::json repetition_json(const RepetitionEvent& ev) {
  nlohmann::json j;
  j["start_word_index"] = ev.start_word_index;
  j["first_seen_index"] = ev.first_seen_index;
  j["window_len"] = ev.window_len;
  j["relative_position"] = ev.relative_position;
  return j;
}

}  // namespace

std::string record_to_json(const TranslationRecord& record) {
  nlohmann::json j;
  j["book"] = record.book;
  j["chapter"] = record.chapter;
  j["ordinal"] = record.ordinal;
  j["request_text"] = record.request_text;
  j["params"] = params_json(record.params);
  j["success"] = record.success;
  j["raw_output"] = record.raw_output;
  j["error"] = record.error;
  j["tokens_generated"] = record.tokens_generated;
  j["attempts"] = record.attempts;
  j["latency_ms"] = record.latency_ms;
  j["trimmed_output"] = record.trimmed_output;
  j["repetition"] =
      record.repetition ? repetition_json(*record.repetition) : nlohmann::json();
  return j.dump();
}

TranslationRecord record_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("invalid translation record JSON: ") + e.what());
  }
  for (const char* key : {"book", "chapter", "ordinal", "success"}) {
    if (!j.contains(key)) {
      throw Error(ErrorKind::Validation,
                  std::string("translation record is missing \"") + key + "\"");
    }
  }
  TranslationRecord r;
  r.book = j.at("book").get<std::string>();
  r.chapter = j.at("chapter").get<int>();
  r.ordinal = j.at("ordinal").get<int>();
  r.request_text = j.value("request_text", "");
  if (j.contains("params") && j.at("params").is_object()) {
    r.params = params_from(j.at("params"));
  }
  r.success = j.at("success").get<bool>();
  r.raw_output = j.value("raw_output", "");
  r.error = j.value("error", "");
  r.tokens_generated = j.value("tokens_generated", 0LL);
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  r.trimmed_output = j.value("trimmed_output", "");
  if (j.contains("repetition") && j.at("repetition").is_object()) {
    const auto& e = j.at("repetition");
    RepetitionEvent ev;
    ev.start_word_index = e.value("start_word_index", std::size_t{0});
    ev.first_seen_index = e.value("first_seen_index", std::size_t{0});
    ev.window_len = e.value("window_len", std::size_t{10});
    ev.relative_position = e.value("relative_position", 0.0);
    r.repetition = ev;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Transports

namespace {

class HttpTransport : public Transport {
 public:
  HttpTransport(const std::string& base_url, int timeout_s)
      : base_url_(base_url) {
    // httplib wants scheme://host[:port]; keep any path part as a prefix.
    std::size_t scheme = base_url.find("://");
    std::size_t path = scheme == std::string::npos
                           ? std::string::npos
                           : base_url.find('/', scheme + 3);
    std::string origin = path == std::string::npos ? base_url
                                                   : base_url.substr(0, path);
    if (path != std::string::npos) prefix_ = base_url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    client_ = std::make_unique<httplib::Client>(origin);
    client_->set_connection_timeout(timeout_s, 0);
    client_->set_read_timeout(timeout_s, 0);
    client_->set_write_timeout(timeout_s, 0);
  }

  std::string describe() const override { return base_url_; }

  WireReply post(const std::string& path, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>& headers)
      override {
    httplib::Headers h(headers.begin(), headers.end());
    auto res = client_->Post((prefix_ + path).c_str(), h, body,
                             "application/json");
    if (!res) {
      return {0, httplib::to_string(res.error())};
    }
    return {res->status, res->body};
  }

 private:
  std::string base_url_;
  std::string prefix_;
  std::unique_ptr<httplib::Client> client_;
};

long long default_token_count(const std::string& text) {
  return static_cast<long long>(CjkCounter().count(text));
}

WireReply json_reply(int status, const nlohmann::json& j) {
  return {status, j.dump()};
}

// Shared request decoding for the in-tree fakes.
struct MockRequest {
  bool ok = false;
  std::string text;
};

MockRequest parse_mock_request(const std::string& body) {
  MockRequest r;
  try {
    const auto j = nlohmann::json::parse(body);
    if (j.contains("text")) {
      r.text = j.at("text").get<std::string>();
      r.ok = true;
    } else if (j.contains("messages") && j.at("messages").is_array() &&
               !j.at("messages").empty()) {
      r.text = j.at("messages").back().value("content", "");
      r.ok = true;
    }
  } catch (const nlohmann::json::exception&) {
  }
  return r;
}

class EchoTransport : public Transport {
 public:
  std::string describe() const override { return "mock:echo"; }
  bool deterministic() const override { return true; }

  WireReply post(const std::string& path, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>&) override {
    const MockRequest req = parse_mock_request(body);
    if (!req.ok) return json_reply(400, {{"error", "bad request"}});
    if (path == "/count_tokens") {
      return json_reply(200, {{"count", default_token_count(req.text)}});
    }
    if (path != "/translate") return json_reply(404, {{"error", "no such route"}});
    nlohmann::json out;
    out["translation"] = req.text;
    out["tokens_generated"] = default_token_count(req.text);
    return json_reply(200, out);
  }
};

std::uint64_t text_fingerprint(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Echoes the request and, with probability `prob`, appends a copy of the
// last `tail` words — the degenerate-loop shape the trimming pass removes.
// The injection coin is a pure function of (request text, seed) so results
// do not depend on worker scheduling or resume order.
class RepeatTransport : public Transport {
 public:
  RepeatTransport(std::size_t tail, double prob, std::uint64_t seed)
      : tail_(tail), prob_(prob), seed_(seed) {}

  std::string describe() const override { return "mock:repeat"; }
  bool deterministic() const override { return true; }

  WireReply post(const std::string& path, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>&) override {
    const MockRequest req = parse_mock_request(body);
    if (!req.ok) return json_reply(400, {{"error", "bad request"}});
    if (path == "/count_tokens") {
      return json_reply(200, {{"count", default_token_count(req.text)}});
    }
    if (path != "/translate") return json_reply(404, {{"error", "no such route"}});
    std::vector<std::string> words = split_words_mixed(req.text);
    Rng coin(seed_ ^ text_fingerprint(req.text));
    const bool inject = coin.real01() < prob_;
    if (inject && !words.empty()) {
      const std::size_t n = std::min(tail_, words.size());
      const std::size_t from = words.size() - n;
      for (std::size_t i = 0; i < n; ++i) words.push_back(words[from + i]);
    }
    const std::string translation = join_words_mixed(words, 0, words.size());
    nlohmann::json out;
    out["translation"] = translation;
    out["tokens_generated"] = default_token_count(translation);
    return json_reply(200, out);
  }

 private:
  std::size_t tail_;
  double prob_;
  std::uint64_t seed_;
};

// Serves responses recorded in a JSONL file keyed by exact request text.
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::string& file) : file_(file) {
    read_jsonl(file, [&](std::size_t, const nlohmann::json& j) {
      if (!j.contains("text") || !j.contains("translation")) {
        throw Error(ErrorKind::Validation,
                    "replay entries need \"text\" and \"translation\"");
      }
      entries_[j.at("text").get<std::string>()] = {
          j.at("translation").get<std::string>(),
          j.value("tokens_generated", -1LL)};
    });
  }

  std::string describe() const override { return "mock:replay?file=" + file_; }
  bool deterministic() const override { return true; }

  WireReply post(const std::string& path, const std::string& body,
                 const std::vector<std::pair<std::string, std::string>>&) override {
    const MockRequest req = parse_mock_request(body);
    if (!req.ok) return json_reply(400, {{"error", "bad request"}});
    if (path == "/count_tokens") {
      return json_reply(200, {{"count", default_token_count(req.text)}});
    }
    if (path != "/translate") return json_reply(404, {{"error", "no such route"}});
    auto it = entries_.find(req.text);
    if (it == entries_.end()) {
      return json_reply(404, {{"error", "no replay entry for request"}});
    }
    nlohmann::json out;
    out["translation"] = it->second.first;
    out["tokens_generated"] = it->second.second >= 0
                                  ? it->second.second
                                  : default_token_count(it->second.first);
    return json_reply(200, out);
  }

 private:
  std::string file_;
  std::unordered_map<std::string, std::pair<std::string, long long>> entries_;
};

std::unordered_map<std::string, std::string> parse_query(const std::string& q) {
  std::unordered_map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < q.size()) {
    std::size_t amp = q.find('&', pos);
    if (amp == std::string::npos) amp = q.size();
    const std::string kv = q.substr(pos, amp - pos);
    const std::size_t eq = kv.find('=');
    if (eq != std::string::npos) {
      out[kv.substr(0, eq)] = kv.substr(eq + 1);
    } else if (!kv.empty()) {
      out[kv] = "";
    }
    pos = amp + 1;
  }
  return out;
}

}  // namespace

std::unique_ptr<Transport> make_transport(const BackendEndpoint& endpoint) {
  const std::string& url = endpoint.base_url;
  if (url.rfind("http://", 0) == 0 || url.rfind("https://", 0) == 0) {
    return std::make_unique<HttpTransport>(url, endpoint.timeout_s);
  }
  if (url.rfind("mock:", 0) != 0) {
    throw Error(ErrorKind::Validation,
                "unsupported backend URL scheme: " + url);
  }
  std::string rest = url.substr(5);
  std::string name = rest, query;
  const std::size_t qpos = rest.find('?');
  if (qpos != std::string::npos) {
    name = rest.substr(0, qpos);
    query = rest.substr(qpos + 1);
  }
  const auto args = parse_query(query);
  auto arg = [&](const char* key, const std::string& fallback) {
    auto it = args.find(key);
    return it == args.end() ? fallback : it->second;
  };
  try {
    if (name == "echo") return std::make_unique<EchoTransport>();
    if (name == "repeat") {
      return std::make_unique<RepeatTransport>(
          static_cast<std::size_t>(std::stoull(arg("tail", "12"))),
          std::stod(arg("prob", "1.0")),
          static_cast<std::uint64_t>(std::stoull(arg("seed", "0"))));
    }
    if (name == "replay") {
      const std::string file = arg("file", "");
      if (file.empty()) {
        throw Error(ErrorKind::Validation, "mock:replay needs ?file=PATH");
      }
      return std::make_unique<ReplayTransport>(file);
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::Validation, "bad mock backend parameter in " + url);
  } catch (const std::out_of_range&) {
    throw Error(ErrorKind::Validation, "bad mock backend parameter in " + url);
  }
  throw Error(ErrorKind::Validation, "unknown mock backend: " + url);
}

// ---------------------------------------------------------------------------
// Translation driver

namespace {

std::vector<std::pair<std::string, std::string>> auth_headers(
    const BackendEndpoint& endpoint) {
  std::vector<std::pair<std::string, std::string>> headers;
  if (endpoint.auth_env.empty()) return headers;
  const char* token = std::getenv(endpoint.auth_env.c_str());
  if (token == nullptr || *token == '\0') {
    throw Error(ErrorKind::Validation,
                "auth environment variable \"" + endpoint.auth_env +
                    "\" is not set");
  }
  headers.emplace_back("Authorization", std::string("Bearer ") + token);
  return headers;
}

struct ParsedReply {
  bool ok = false;
  std::string translation;
  long long tokens_generated = 0;
  std::string problem;
};

ParsedReply parse_backend_reply(const std::string& mode, const std::string& body) {
  ParsedReply out;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    out.problem = std::string("malformed backend response: ") + e.what();
    return out;
  }
  if (mode == "chat-completions") {
    if (!j.contains("choices") || !j.at("choices").is_array() ||
        j.at("choices").empty()) {
      out.problem = "malformed backend response: no choices";
      return out;
    }
    const auto& choice = j.at("choices").at(0);
    if (!choice.contains("message") || !choice.at("message").contains("content")) {
      out.problem = "malformed backend response: no message content";
      return out;
    }
    out.translation = choice.at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      out.tokens_generated = j.at("usage").value("completion_tokens", 0LL);
    }
    out.ok = true;
    return out;
  }
  if (!j.contains("translation")) {
    out.problem = "malformed backend response: no \"translation\"";
    return out;
  }
  out.translation = j.at("translation").get<std::string>();
  out.tokens_generated = j.value("tokens_generated", 0LL);
  out.ok = true;
  return out;
}

struct WireCall {
  std::string path;
  std::string body;
};

WireCall build_wire_call(const BackendEndpoint& endpoint,
                         const DecodingParams& params,
                         const std::string& rendered,
                         const std::string& src_lang,
                         const std::string& tgt_lang) {
  WireCall call;
  if (endpoint.mode == "chat-completions") {
    call.path = "/v1/chat/completions";
    nlohmann::json j;
    j["model"] = endpoint.model.empty() ? "default" : endpoint.model;
    j["messages"] = nlohmann::json::array(
        {nlohmann::json{{"role", "user"}, {"content", rendered}}});
    j["max_tokens"] = params.max_new_tokens;
    j["stop"] = nlohmann::json::array({params.stop_token});
    // Non-standard decoding knobs travel under the same names we use on
    // the generic protocol; servers that do not know them ignore them.
    j["strategy"] = params.strategy;
    j["beam_size"] = params.beam_size;
    j["repetition_penalty"] = params.repetition_penalty;
    call.body = j.dump();
    return call;
  }
  call.path = "/translate";
  nlohmann::json j;
  j["text"] = rendered;
  j["src_lang"] = src_lang;
  j["tgt_lang"] = tgt_lang;
  j["params"] = params_json(params);
  call.body = j.dump();
  return call;
}

void default_sleep(int ms) {
  std::this_thread::sleep_for(std::chrono::milliseconds(ms));
}

}  // namespace

TranslationRecord translate(const Block& block, const BackendEndpoint& endpoint,
                            const DecodingParams& params,
                            const PromptTemplate& prompt_template,
                            const std::string& src_lang, const std::string& tgt_lang,
                            Transport& transport,
                            const std::function<void(int)>& sleep_ms) {
  validate_decoding_params(params);
  validate_endpoint(endpoint);
  const auto headers = auth_headers(endpoint);
  const std::string rendered =
      prompt_template.render(block.src, src_lang, tgt_lang);
  const WireCall call =
      build_wire_call(endpoint, params, rendered, src_lang, tgt_lang);

  TranslationRecord record;
  record.book = block.book;
  record.chapter = block.chapter;
  record.ordinal = block.ordinal;
  record.request_text = rendered;
  record.params = params;

  const auto sleep_fn = sleep_ms ? sleep_ms : default_sleep;
  int delay = endpoint.backoff.initial_ms;
  std::string last_problem;
  const auto t0 = std::chrono::steady_clock::now();
  for (int attempt = 1; attempt <= endpoint.max_retries + 1; ++attempt) {
    record.attempts = attempt;
    const WireReply reply = transport.post(call.path, call.body, headers);
    if (reply.status == 200) {
      const ParsedReply parsed = parse_backend_reply(endpoint.mode, reply.body);
      if (parsed.ok) {
        record.success = true;
        record.raw_output = parsed.translation;
        record.tokens_generated = parsed.tokens_generated;
        break;
      }
      last_problem = parsed.problem;
    } else if (reply.status == 0) {
      last_problem = "transport: " + reply.body;
    } else {
      last_problem = "HTTP " + std::to_string(reply.status);
    }
    if (attempt <= endpoint.max_retries) {
      if (delay > 0) sleep_fn(delay);
      delay = std::min(
          endpoint.backoff.max_ms,
          static_cast<int>(static_cast<double>(std::max(delay, 1)) *
                           endpoint.backoff.multiplier));
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  record.latency_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (transport.deterministic()) record.latency_ms = 0.0;
  if (!record.success) {
    record.error = "TranslateFailed after " + std::to_string(record.attempts) +
                   " attempts: " + last_problem;
  }
  return record;
}

TranslationRecord translate(const Block& block, const BackendEndpoint& endpoint,
                            const DecodingParams& params,
                            const PromptTemplate& prompt_template,
                            const std::string& src_lang,
                            const std::string& tgt_lang) {
  auto transport = make_transport(endpoint);
  return translate(block, endpoint, params, prompt_template, src_lang, tgt_lang,
                   *transport, {});
}

std::vector<TranslationRecord> translate_corpus(
    const std::vector<Block>& blocks, const BackendEndpoint& endpoint,
    const DecodingParams& params, const PromptTemplate& prompt_template,
    const std::string& src_lang, const std::string& tgt_lang,
    const TranslateRunOptions& options) {
  if (options.max_in_flight < 1) {
    throw Error(ErrorKind::Validation, "max_in_flight must be >= 1");
  }
  validate_decoding_params(params);
  validate_endpoint(endpoint);
  auth_headers(endpoint);  // fail before spawning workers if auth is broken

  // Successful rows from an earlier run are reused verbatim.
  std::map<std::tuple<std::string, int, int>, TranslationRecord> cached;
  if (!options.resume_manifest.empty() &&
      std::filesystem::exists(options.resume_manifest)) {
    std::ifstream in(options.resume_manifest, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        TranslationRecord r = record_from_json(line);
        if (r.success) {
          cached[{r.book, r.chapter, r.ordinal}] = std::move(r);
        }
      } catch (const Error&) {
        // A run killed mid-write leaves a torn last line; skip it.
      }
    }
  }

  const std::size_t n = blocks.size();
  std::vector<std::optional<TranslationRecord>> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex manifest_mu;
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    std::unique_ptr<Transport> transport =
        options.transport_factory ? options.transport_factory()
                                  : make_transport(endpoint);
    while (!stop.load(std::memory_order_acquire)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) break;
      const Block& block = blocks[i];
      const auto key = std::make_tuple(block.book, block.chapter, block.ordinal);
      const auto hit = cached.find(key);
      if (hit != cached.end() &&
          hit->second.request_text ==
              prompt_template.render(block.src, src_lang, tgt_lang) &&
          decoding_params_to_json(hit->second.params) ==
              decoding_params_to_json(params)) {
        // Reuse only rows produced by an identical request; a changed prompt
        // or decoding setup invalidates the cached translation.
        results[i] = hit->second;
        continue;
      }
      TranslationRecord record =
          translate(block, endpoint, params, prompt_template, src_lang,
                    tgt_lang, *transport, options.sleep_ms);
      if (!options.resume_manifest.empty()) {
        std::lock_guard<std::mutex> lock(manifest_mu);
        append_line(options.resume_manifest, record_to_json(record));
      }
      const bool failed = !record.success;
      results[i] = std::move(record);
      if (failed && options.fail_fast) {
        stop.store(true, std::memory_order_release);
      }
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight),
                            std::max<std::size_t>(1, n));
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    threads.emplace_back([&]() {
      try {
        worker();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        stop.store(true, std::memory_order_release);
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // Indices are handed out in order, so finished work is a prefix; with
  // fail_fast the unattempted tail is simply absent.
  std::vector<TranslationRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!results[i]) break;
    records.push_back(std::move(*results[i]));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Remote token counting

struct RemoteTokenCounter::State {
  BackendEndpoint endpoint;
  std::unique_ptr<Transport> transport;
  std::vector<std::pair<std::string, std::string>> headers;
  std::mutex mu;
};

RemoteTokenCounter::RemoteTokenCounter(const BackendEndpoint& endpoint)
    : state_(std::make_shared<State>()) {
  validate_endpoint(endpoint);
  state_->endpoint = endpoint;
  state_->transport = make_transport(endpoint);
  state_->headers = auth_headers(endpoint);
}

std::size_t RemoteTokenCounter::count(std::string_view text) const {
  if (text.empty()) return 0;
  nlohmann::json j;
  j["text"] = std::string(text);
  std::lock_guard<std::mutex> lock(state_->mu);
  const WireReply reply =
      state_->transport->post("/count_tokens", j.dump(), state_->headers);
  if (reply.status != 200) {
    throw Error(ErrorKind::Backend,
                "count_tokens failed: HTTP " + std::to_string(reply.status));
  }
  try {
    const auto parsed = nlohmann::json::parse(reply.body);
    return parsed.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Backend,
                std::string("count_tokens returned malformed JSON: ") + e.what());
  }
}

}  // namespace ch2ch
