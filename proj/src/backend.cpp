#include "aslab/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "aslab/error.hpp"
#include "aslab/util.hpp"

namespace aslab::backend {

int estimate_tokens(const CompletionRequest& req) {
  const size_t chars = req.system_prompt.size() + req.user_prompt.size();
  return static_cast<int>((chars + 3) / 4);
}

std::string fingerprint(const CompletionRequest& req) {
  return util::sha256_hex(req.system_prompt + "\x1e" + req.user_prompt);
}

namespace {

void check_context(const CompletionRequest& req) {
  if (!std::isfinite(req.temperature) || req.temperature < 0.0)
    raise(ErrorCode::OutOfRange, "temperature must be finite and >= 0");
  if (estimate_tokens(req) > req.max_context_tokens)
    raise(ErrorCode::ContextOverflow,
          "estimated " + std::to_string(estimate_tokens(req)) + " tokens > " +
              std::to_string(req.max_context_tokens));
}

}  // namespace

// ---------------------------------------------------------------------------
// ScriptedBackend
// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script, uint64_t seed)
    : script_(std::move(script)), seed_(seed) {
  if (script_.empty()) raise(ErrorCode::EmptyInput, "scripted backend needs a non-empty script");
}

ScriptedBackend ScriptedBackend::from_json(const std::string& text, uint64_t seed) {
  std::vector<ScriptEntry> entries;
  const auto j = nlohmann::json::parse(text);
  for (const auto& e : j.at("entries")) {
    ScriptEntry entry;
    const std::string kind = e.value("match", "contains");
    if (kind == "fingerprint") entry.kind = ScriptEntry::Match::Fingerprint;
    else if (kind == "contains") entry.kind = ScriptEntry::Match::Contains;
    else raise(ErrorCode::ConfigError, "unknown script match kind: " + kind);
    entry.key = e.at("key").get<std::string>();
    entry.response = e.at("response").get<std::string>();
    entries.push_back(std::move(entry));
  }
  return ScriptedBackend(std::move(entries), seed);
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path, uint64_t seed) {
  return from_json(util::read_file(path), seed);
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& req) {
  check_context(req);
  const std::string fp = fingerprint(req);
  const std::string haystack = req.system_prompt + "\n" + req.user_prompt;
  for (const auto& entry : script_) {
    const bool hit = entry.kind == ScriptEntry::Match::Fingerprint
                         ? entry.key == fp
                         : util::contains(haystack, entry.key);
    if (hit) {
      CompletionResult result;
      result.text = entry.response;
      // Deterministic pseudo-latency derived from (seed, fingerprint).
      const uint64_t h = util::derive_seed(seed_, {fp});
      result.latency_s = 0.01 + static_cast<double>(h % 1000) / 1e5;
      result.truncated = false;
      return result;
    }
  }
  raise(ErrorCode::ScriptMiss, "no script entry matches prompt fingerprint " + fp.substr(0, 12));
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

HttpBackend::HttpBackend(std::string base_url, std::string api_key, std::string model,
                         RetryPolicy retry, uint64_t seed, Sleeper sleeper)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      model_(std::move(model)),
      retry_(retry),
      seed_(seed),
      sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](double seconds) {
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    };
  }
}

std::unique_ptr<HttpBackend> HttpBackend::from_env(std::string model, RetryPolicy retry,
                                                   uint64_t seed) {
  const char* url = std::getenv("BACKEND_URL");
  if (!url || !*url) raise(ErrorCode::ConfigError, "BACKEND_URL is not set");
  const char* key = std::getenv("BACKEND_API_KEY");
  return std::make_unique<HttpBackend>(url, key ? key : "", std::move(model), retry, seed);
}

std::vector<double> HttpBackend::backoff_schedule() const {
  std::vector<double> delays;
  util::Rng rng(util::derive_seed(seed_, {"backoff"}));
  double delay = retry_.base_delay_s;
  for (int attempt = 1; attempt < retry_.max_attempts; ++attempt) {
    const double jitter = 1.0 + retry_.jitter * (2.0 * rng.next_double() - 1.0);
    delays.push_back(delay * jitter);
    delay *= 2.0;
  }
  return delays;
}

CompletionResult HttpBackend::complete(const CompletionRequest& req) {
  check_context(req);

  nlohmann::json payload;
  payload["model"] = model_;
  payload["messages"] = nlohmann::json::array(
      {{{"role", "system"}, {"content", req.system_prompt}},
       {{"role", "user"}, {"content", req.user_prompt}}});
  // Temperature passes through verbatim.
  payload["temperature"] = req.temperature;
  const std::string body = payload.dump();

  const auto delays = backoff_schedule();
  std::string last_error;

  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) sleeper_(delays[static_cast<size_t>(attempt - 1)]);

    httplib::Client client(base_url_);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(600, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post("/v1/chat/completions", headers, body, "application/json");
    const double latency =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403)
      raise(ErrorCode::AuthError, "provider returned HTTP " + std::to_string(res->status));
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const std::exception& e) {
      last_error = std::string("malformed provider response: ") + e.what();
      continue;
    }
    const auto& choices = j.at("choices");
    if (choices.empty()) {
      last_error = "provider returned no choices";
      continue;
    }
    CompletionResult result;
    result.text = choices.at(0).at("message").at("content").get<std::string>();
    result.latency_s = latency;
    result.truncated = choices.at(0).value("finish_reason", "") == "length";
    return result;
  }
  raise(ErrorCode::ProviderUnavailable,
        "gave up after " + std::to_string(retry_.max_attempts) + " attempts (" + last_error + ")");
}

// ---------------------------------------------------------------------------
// RequestLogger
// ---------------------------------------------------------------------------

RequestLogger::RequestLogger(std::string path) : path_(std::move(path)) {}

void RequestLogger::log(const std::string& run_id, const std::string& node_id,
                        double temperature, const std::string& prompt_sha256,
                        double latency_s) {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["node_id"] = node_id;
  j["temperature"] = temperature;
  j["prompt_sha256"] = prompt_sha256;
  j["latency_s"] = latency_s;
  std::lock_guard<std::mutex> lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << '\n';
}

}  // namespace aslab::backend
